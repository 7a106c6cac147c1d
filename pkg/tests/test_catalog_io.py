import pytest

from conftest import build_running_example
from linddun_workbench import fixture_path
from linddun_workbench.catalog_io import (
    CATALOG_HEADER,
    export_reports,
    export_step_files,
    parse_catalog,
    render_gap_report,
    render_table,
)
from linddun_workbench.errors import ParseError
from linddun_workbench.model import LinddunProfile
from linddun_workbench.replay import ProjectState, gap_report


HEADER_LINE = ",".join(CATALOG_HEADER)


def catalog(*rows):
    return "\n".join([HEADER_LINE, *rows]) + "\n"


class TestParseCatalog:
    def test_fixture_corpus_shape(self):
        rows = parse_catalog(fixture_path("automotive.csv").read_bytes())
        assert len(rows) == 75
        assert [str(r.id) for r in rows] == [f"p{i}a" for i in range(1, 76)]
        tags = [r.source.document_tag for r in rows]
        assert tags.count("enisa") == 30
        assert tags.count("chah") == 20
        assert tags.count("bella") == 25

    def test_ticks_to_profile(self):
        rows = parse_catalog(catalog("p1,Alpha,enisa,1,,,,1,,"))
        assert rows[0].profile == LinddunProfile.of("L", "Di")

    def test_default_source_tag_fills_gaps(self):
        rows = parse_catalog(catalog("p1,Alpha,,1,,,,,,"), default_source_tag="demo")
        assert rows[0].source.document_tag == "demo"

    def test_missing_source_without_default(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,,1,,,,,,"))
        assert (err.value.line, err.value.column) == (2, 3)

    def test_final_rows_parse_provenance(self):
        rows = parse_catalog(catalog('f1,Merged,"rename(embrace(p1, p2))",1,,,,,,'))
        assert rows[0].source.render() == "rename(embrace(p1, p2))"

    def test_bad_provenance_located(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("f1,Merged,rename(,1,,,,,,"))
        assert (err.value.line, err.value.column) == (2, 3)

    def test_header_must_match_exactly(self):
        with pytest.raises(ParseError) as err:
            parse_catalog("id,label,source,L,I,N,D,DI,U,Nc\n")
        assert err.value.line == 1

    def test_empty_input_rejected(self):
        with pytest.raises(ParseError):
            parse_catalog(b"")

    def test_header_only_is_empty_catalog(self):
        assert parse_catalog(HEADER_LINE + "\n") == []

    def test_blank_lines_skipped(self):
        rows = parse_catalog(catalog("p1,Alpha,enisa,,,,,,,", "", "p2,Beta,enisa,,,,,,,"))
        assert len(rows) == 2

    def test_tick_glyph_rejected_with_coordinates(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,enisa,\N{CHECK MARK},,,,,,"))
        assert "1" in err.value.args[0]
        assert (err.value.line, err.value.column) == (2, 4)

    def test_tick_coordinates_track_the_column(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,enisa,,,,,,,x"))
        assert (err.value.line, err.value.column) == (2, 10)

    def test_cell_count_enforced(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,enisa,1"))
        assert "10 cells" in err.value.args[0]
        assert err.value.line == 2

    def test_id_column_all_or_none(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,enisa,,,,,,,", ",Beta,enisa,,,,,,,"))
        assert (err.value.line, err.value.column) == (3, 1)

    def test_p_ids_must_be_gapless(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,Alpha,enisa,,,,,,,", "p3,Beta,enisa,,,,,,,"))
        assert "expected index 2" in err.value.args[0]

    def test_p_sequences_are_per_suffix(self):
        rows = parse_catalog(
            catalog("p1a,Alpha,enisa,,,,,,,", "p1w,Beta,enisa,,,,,,,", "p2a,Gamma,enisa,,,,,,,")
        )
        assert [str(r.id) for r in rows] == ["p1a", "p1w", "p2a"]

    def test_f_ids_must_increase(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(
                catalog('f2,Two,"carry:p1",,,,,,,'.replace("carry:p1", "p1"), 'f2,Dup,"p2",,,,,,,')
            )
        assert "strictly increasing" in err.value.args[0]

    def test_m_ids_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("m1,Nope,enisa,,,,,,,"))
        assert "catalog" in err.value.args[0]

    def test_non_utf8_rejected(self):
        with pytest.raises(ParseError):
            parse_catalog(b"\xff\xfe\x00" + HEADER_LINE.encode())

    def test_label_cell_errors_located(self):
        with pytest.raises(ParseError) as err:
            parse_catalog(catalog("p1,*unbalanced,enisa,,,,,,,"))
        assert (err.value.line, err.value.column) == (2, 2)


class TestParseCatalogPlain:
    def test_rows_without_ids(self):
        rows = parse_catalog(catalog(",Alpha,enisa,1,,,,,,", ",Beta,chah,,1,,,,,"))
        assert [r.id for r in rows] == [None, None]
        assert [r.label.text for r in rows] == ["Alpha", "Beta"]

    def test_rows_with_ids(self):
        rows = parse_catalog(catalog("p1,Alpha,enisa,1,,,,,,", "p2,Beta,chah,,1,,,,,"))
        assert [str(r.id) for r in rows] == ["p1", "p2"]


class TestRenderTables:
    def test_round_trip_through_delimited(self, running_project):
        state = running_project.state()
        data = render_table(state.table("P"))
        rows = parse_catalog(data)
        assert [str(r.id) for r in rows] == ["p1", "p2", "p3"]
        assert rows[0].profile == LinddunProfile.of("L")

    def test_final_table_round_trip(self, running_project):
        state = running_project.state()
        rows = parse_catalog(render_table(state.table("F")))
        assert [str(r.id) for r in rows] == ["f1"]
        assert rows[0].source.render() == "rename(embrace(p1, p2))"

    def test_doc_table_row(self, store):
        handle = build_running_example(store, through_step=3)
        text = render_table(handle.state().table("F"), "doc-table").decode("utf-8")
        lines = text.splitlines()
        assert lines[0] == "id | label | source | L | I | N | D | Di | U | Nc"
        cells = lines[1].split(" | ")
        assert cells[:3] == [
            "f1",
            "Weak web session control mechanisms",
            "rename(embrace(p1, p2))",
        ]
        assert cells[3:] == ["\N{CHECK MARK}", "", "", "", "", "", ""]

    def test_mapping_doc_table_has_three_columns(self, running_project):
        text = render_table(running_project.state().table("M"), "doc-table").decode("utf-8")
        lines = text.splitlines()
        assert lines[0] == "id | composed | source"
        assert lines[1].startswith("m1 | Non-anonymous communication are linked based on session ID | ")
        assert "embrace(f1, " in lines[1]

    def test_unknown_format_rejected(self, running_project):
        with pytest.raises(ParseError):
            render_table(running_project.state().table("P"), "xml")


class TestGapReportRendering:
    def test_delimited_shape(self, combined_project):
        _, records = gap_report(combined_project.state())
        text = render_gap_report(records).decode("utf-8")
        lines = text.splitlines()
        assert lines[0] == "F,LB,S,generalized"
        assert len(lines) == 9
        assert lines[1].startswith("f13a,")

    def test_doc_table_keeps_asterisks_in_lb_only(self, combined_project):
        _, records = gap_report(combined_project.state())
        text = render_gap_report(records, "doc-table").decode("utf-8")
        for line, record in zip(text.splitlines()[1:], records):
            cells = line.split(" | ")
            assert cells[1] == record.original_label.render()
            assert "*" not in cells[3]


class TestStepExports:
    def test_single_batch_uses_bare_names(self, running_project, tmp_path):
        written = export_step_files(running_project.state(), tmp_path)
        assert [p.name for p in written] == ["step1", "step2", "step3", "step4", "step5"]

    def test_step_row_counts(self, automotive_project, tmp_path):
        out = {p.name: p for p in export_step_files(automotive_project.state(), tmp_path)}
        def count(name):
            return len(out[name].read_bytes().decode("utf-8").splitlines()) - 1
        assert count("step1") == 75
        assert count("step2") == 75
        assert count("step3") == 41
        # two finals stay gap-confirmed, so they have no mapping record
        assert count("step4") == 39
        assert count("step5") == 41

    def test_multi_batch_gets_suffix_tags(self, combined_project, tmp_path):
        names = {p.name for p in export_step_files(combined_project.state(), tmp_path)}
        assert "step1-a" in names and "step1-w" in names
        assert "step1" not in names
        assert len(names) == 10

    def test_web_batch_counts(self, combined_project, tmp_path):
        out = {p.name: p for p in export_step_files(combined_project.state(), tmp_path)}
        step3 = out["step3-w"].read_bytes().decode("utf-8").splitlines()
        assert len(step3) - 1 == 15

    def test_step5_statuses(self, combined_project, tmp_path):
        out = {p.name: p for p in export_step_files(combined_project.state(), tmp_path)}
        rows = [line.split(",") for line in out["step5-a"].read_text().splitlines()[1:]]
        status = {cells[0]: cells[1] for cells in rows}
        assert status["f13a"] == "gap-confirmed"
        assert status["f7a"] == "mapped"
        extended = {cells[0] for cells in rows if cells[3] == "1"}
        assert "f21a" in extended

    def test_empty_project_writes_header_only_files(self, tmp_path):
        written = export_step_files(ProjectState(), tmp_path)
        assert len(written) == 5
        for path in written:
            lines = path.read_bytes().decode("utf-8").splitlines()
            assert len(lines) == 1


class TestReportExports:
    def test_files_and_banner(self, store, tmp_path):
        handle = build_running_example(store, through_step=4)
        written = export_reports(handle.state(), tmp_path)
        names = [p.name for p in written]
        assert names == ["table-P.txt", "table-F.txt", "table-M.txt", "gap-report.csv", "gap-report.txt"]
        text = (tmp_path / "gap-report.txt").read_text()
        assert not text.startswith("#")

    def test_provisional_banner_when_unchecked(self, store, tmp_path):
        handle = build_running_example(store, through_step=3)
        export_reports(handle.state(), tmp_path)
        text = (tmp_path / "gap-report.txt").read_text()
        assert text.splitlines()[0] == "# provisional: unchecked final threats remain"
