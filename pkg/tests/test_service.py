import pytest
from fastapi.testclient import TestClient

from conftest import build_domain, build_running_example
from linddun_workbench import fixture_path
from linddun_workbench.service import create_app

HEADER = "id,label,source,L,I,N,D,Di,U,Nc"


def csv_of(*rows):
    return ("\n".join([HEADER, *rows]) + "\n").encode("utf-8")


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


def make_project(client, name="demo"):
    response = client.post("/api/projects", json={"name": name})
    assert response.status_code == 201
    return response.json()


class TestProjects:
    def test_create_and_fetch(self, client):
        record = make_project(client)
        assert set(record) == {"id", "name", "created", "log_length"}
        assert record["log_length"] == 0
        assert client.get(f"/api/projects/{record['id']}").json()["name"] == "demo"
        assert client.get("/api/projects/demo").json()["id"] == record["id"]

    def test_listing(self, client):
        make_project(client, "one")
        make_project(client, "two")
        names = {p["name"] for p in client.get("/api/projects").json()["projects"]}
        assert names == {"one", "two"}

    def test_missing_name_is_400(self, client):
        response = client.post("/api/projects", json={})
        assert response.status_code == 400
        body = response.json()
        assert body["error"]["code"] == "invalid-argument"

    def test_duplicate_name_is_409(self, client):
        make_project(client)
        response = client.post("/api/projects", json={"name": "demo"})
        assert response.status_code == 409
        assert response.json()["error"]["code"] == "conflict"

    def test_unknown_project_is_404(self, client):
        response = client.get("/api/projects/nope")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "not-found"


class TestImportAndOps:
    def test_import_reports_count(self, client):
        make_project(client)
        response = client.post(
            "/api/projects/demo/import",
            content=csv_of(",Alpha,doc,1,,,,,,", ",Beta,doc,,,,,,,"),
        )
        assert response.status_code == 200
        assert response.json() == {"imported": 2, "log_length": 2}

    def test_import_parse_error_is_400(self, client):
        make_project(client)
        response = client.post("/api/projects/demo/import", content=b"id,nope\n")
        assert response.status_code == 400
        assert "header" in response.json()["error"]["message"]

    def test_ops_apply_and_echo_rows(self, client):
        make_project(client)
        client.post("/api/projects/demo/import", content=csv_of(",Alpha,doc,,,,,,,", ",Beta,doc,,,,,,,"))
        response = client.post(
            "/api/projects/demo/ops",
            json={"statement": 'profile(p1, {L})\nf1 := rename(embrace(p1, p2), "Merged")'},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["applied"] == 2
        assert body["rows"][0]["kind"] == "preliminary"
        assert body["rows"][1]["kind"] == "final"
        assert body["rows"][1]["source"] == "rename(embrace(p1, p2))"
        assert body["rows"][1]["properties"] == ["L"]

    def test_ops_missing_statement_is_400(self, client):
        make_project(client)
        response = client.post("/api/projects/demo/ops", json={"note": "hi"})
        assert response.status_code == 400

    def test_ops_parse_error_is_400(self, client):
        make_project(client)
        response = client.post("/api/projects/demo/ops", json={"statement": "f1 := embrace(p1"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "parse-error"

    def test_ops_precondition_is_422(self, client):
        make_project(client)
        client.post("/api/projects/demo/import", content=csv_of(",Alpha,doc,,,,,,,"))
        response = client.post("/api/projects/demo/ops", json={"statement": "f1 := embrace(p1)"})
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "invalid-arity"

    def test_failed_batch_does_not_move_the_log(self, client):
        make_project(client)
        client.post("/api/projects/demo/import", content=csv_of(",Alpha,doc,,,,,,,"))
        before = client.get("/api/projects/demo/log").json()["log_length"]
        response = client.post(
            "/api/projects/demo/ops",
            json={"statement": "f1 := carry(p1)\nf2 := carry(p1)"},
        )
        assert response.status_code == 422
        assert client.get("/api/projects/demo/log").json()["log_length"] == before


class TestTables:
    def test_preliminary_rows_carry_consumption_flags(self, store):
        build_running_example(store, through_step=3)
        client = TestClient(create_app(store))
        rows = client.get("/api/projects/running-example/tables/P").json()["rows"]
        flags = {r["id"]: (r["consumed"], r["reserve"]) for r in rows}
        assert flags == {"p1": (True, False), "p2": (True, False), "p3": (False, True)}

    def test_final_and_mapping_tables(self, store):
        build_running_example(store, through_step=5)
        client = TestClient(create_app(store))
        finals = client.get("/api/projects/running-example/tables/F").json()["rows"]
        assert [r["id"] for r in finals] == ["f1"]
        assert finals[0]["properties"] == ["L", "I"]
        mappings = client.get("/api/projects/running-example/tables/M").json()["rows"]
        assert mappings[0]["m_id"] == "m1"
        assert mappings[0]["step5_extended"] is True
        assert len(mappings[0]["nodes"]) == 7

    def test_unknown_stage_is_404(self, client):
        make_project(client)
        assert client.get("/api/projects/demo/tables/Q").status_code == 404


class TestSuggestionsAndReports:
    def test_suggestions_use_query_threshold(self, client):
        make_project(client)
        client.post(
            "/api/projects/demo/import",
            content=csv_of(
                ",Insufficient randomness of session ID,doc,,,,,,,",
                ",Session control mechanisms may be hijacked,doc,,,,,,,",
            ),
        )
        body = client.get("/api/projects/demo/suggestions").json()
        assert body["threshold"] == 0.1
        assert body["candidates"][0]["ids"] == ["p1", "p2"]
        assert body["candidates"][0]["score_exact"] == "1/7"
        strict = client.get("/api/projects/demo/suggestions", params={"threshold": 0.5}).json()
        assert strict["candidates"] == []

    def test_bad_threshold_is_422(self, client):
        make_project(client)
        response = client.get("/api/projects/demo/suggestions", params={"threshold": 2})
        assert response.status_code == 422

    def test_gap_report_shape(self, store):
        build_domain(store, "combined", (("automotive", "a"), ("web", "w")))
        client = TestClient(create_app(store))
        body = client.get("/api/projects/combined/gap-report").json()
        assert body["provisional"] is False
        ids = [r["final_id"] for r in body["records"]]
        assert ids == ["f13a", "f41a", "f2w", "f4w", "f7w", "f11w", "f13w", "f14w"]
        assert all(r["confirmed"] for r in body["records"])
        assert all("*" not in r["generalized_label"] for r in body["records"])

    def test_stats_route(self, store):
        build_domain(store, "automotive", (("automotive", "a"),))
        client = TestClient(create_app(store))
        body = client.get("/api/projects/automotive/stats", params={"suffix": "a"}).json()
        assert body["rendered"] == "75 → 41 (embrace 26, rename 4, discard 3)"

    def test_log_since(self, client):
        make_project(client)
        client.post("/api/projects/demo/import", content=csv_of(",Alpha,doc,,,,,,,"))
        client.post("/api/projects/demo/ops", json={"statement": "f1 := carry(p1)"})
        body = client.get("/api/projects/demo/log", params={"since": 1}).json()
        assert body["log_length"] == 2
        assert [e["seq"] for e in body["entries"]] == [2]
        assert body["entries"][0]["stmt"] == "f1 := carry(p1)"

    def test_negative_since_is_422(self, client):
        make_project(client)
        assert client.get("/api/projects/demo/log", params={"since": -1}).status_code == 422


class TestTrees:
    def test_trees_route(self, store):
        build_running_example(store, through_step=3)
        client = TestClient(create_app(store))
        body = client.get("/api/projects/running-example/trees").json()
        roots = body["properties"]["L"]
        assert [r["id"] for r in roots] == ["L_df1", "L_ds4"]
        chain = roots[0]
        assert chain["children"][0]["children"][0]["id"] == "L_df10"
        assert (
            chain["children"][0]["children"][0]["composed"]
            == "Non-anonymous communication are linked based on session ID"
        )

    def test_missing_trees_is_404(self, client):
        make_project(client)
        assert client.get("/api/projects/demo/trees").status_code == 404


class TestStaticHosting:
    def test_placeholder_without_bundle(self, store):
        client = TestClient(create_app(store, ui_dir="does/not/exist"))
        response = client.get("/")
        assert response.status_code == 200
        assert "workbench API is up" in response.text

    def test_bundle_is_mounted(self, store, tmp_path):
        bundle = tmp_path / "dist"
        bundle.mkdir()
        (bundle / "index.html").write_text("<!doctype html><p>bundled ui</p>")
        client = TestClient(create_app(store, ui_dir=bundle))
        response = client.get("/")
        assert "bundled ui" in response.text
