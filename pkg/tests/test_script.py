import pytest

from linddun_workbench.errors import ParseError
from linddun_workbench.model import Label, LinddunProfile, ThreatId
from linddun_workbench.script import (
    AssignStmt,
    CarryStmt,
    DiscardStmt,
    ExprEmbrace,
    ExprRename,
    MapStmt,
    ProfileStmt,
    SafetyStmt,
    parse_script,
    parse_script_lines,
    parse_statement,
    print_script,
    print_statement,
)


def tid(text):
    return ThreatId.parse(text)


class TestGrammar:
    def test_assign_with_representative(self):
        stmt = parse_statement(
            'f1 := rename(embrace(p1, p2; rep=p2), "Weak web session control mechanisms")'
        )
        assert isinstance(stmt, AssignStmt)
        assert stmt.target == tid("f1")
        assert isinstance(stmt.expr, ExprRename)
        inner = stmt.expr.inner
        assert isinstance(inner, ExprEmbrace)
        assert inner.ids == (tid("p1"), tid("p2"))
        assert inner.representative == tid("p2")
        assert stmt.expr.label == Label.parse("Weak web session control mechanisms")

    def test_assign_with_domain_segment(self):
        stmt = parse_statement(
            'f35 := rename(embrace(p11, p63), "Unauthorised access *in OEM and/or car services*")'
        )
        assert stmt.expr.label.has_domain_segments

    def test_discard_with_reason(self):
        stmt = parse_statement('discard(p30, "not privacy")')
        assert stmt == DiscardStmt(tid("p30"), "not privacy")

    def test_discard_without_reason_is_empty(self):
        assert parse_statement("discard(p30)") == DiscardStmt(tid("p30"), "")

    def test_profile(self):
        stmt = parse_statement("profile(p3, {L, I, Di})")
        assert stmt == ProfileStmt(tid("p3"), LinddunProfile.of("L", "I", "Di"))

    def test_profile_empty_set(self):
        assert parse_statement("profile(p3, {})").profile == LinddunProfile()

    def test_map(self):
        stmt = parse_statement("map(f1, {L_df1, L_df4, L_df10}, L_df10)")
        assert isinstance(stmt, MapStmt)
        assert [str(n) for n in stmt.nodes] == ["L_df1", "L_df4", "L_df10"]
        assert str(stmt.representative) == "L_df10"

    def test_safety_with_empty_set(self):
        stmt = parse_statement("safety(f13a, {})")
        assert stmt == SafetyStmt(tid("f13a"), ())

    def test_carry_explicit(self):
        assert parse_statement("f2 := carry(p9)") == CarryStmt(tid("f2"), tid("p9"))

    def test_bare_preliminary_is_carry(self):
        assert parse_statement("f2 := p9") == CarryStmt(tid("f2"), tid("p9"))

    def test_bare_final_rejected(self):
        with pytest.raises(ParseError):
            parse_statement("f2 := f1")

    def test_whitespace_insensitive(self):
        a = parse_statement("f1:=embrace(p1,p2)")
        b = parse_statement("f1  :=  embrace( p1 , p2 )")
        assert a == b

    def test_comments_and_blank_lines(self):
        text = "# a comment\n\nf1 := embrace(p1, p2)  # trailing\n"
        assert len(parse_script(text)) == 1

    def test_line_numbers_survive(self):
        text = "# heading\nf1 := embrace(p1, p2)\n\ndiscard(p3)\n"
        lines = [n for n, _ in parse_script_lines(text)]
        assert lines == [2, 4]


class TestParseErrors:
    def test_located_syntax_error(self):
        with pytest.raises(ParseError) as err:
            parse_script("f1 := embrace(p1 p2)")
        assert err.value.line == 1
        assert err.value.column == 18

    def test_error_line_tracks_script_position(self):
        with pytest.raises(ParseError) as err:
            parse_script("f1 := embrace(p1, p2)\nf2 := hug(p3)")
        assert err.value.line == 2

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as err:
            parse_script("f1 := embrace(p1, p2) @")
        assert err.value.column == 23

    def test_keyword_cannot_start_statement(self):
        with pytest.raises(ParseError):
            parse_statement("embrace(p1, p2)")

    def test_unknown_keyword(self):
        with pytest.raises(ParseError):
            parse_statement("retire(p1)")

    def test_trailing_tokens(self):
        with pytest.raises(ParseError):
            parse_statement("discard(p1) discard(p2)")

    def test_unterminated_string(self):
        with pytest.raises(ParseError):
            parse_statement('f1 := rename(embrace(p1, p2), "oops)')

    def test_statement_count_discipline(self):
        with pytest.raises(ParseError):
            parse_statement("f1 := embrace(p1, p2)\ndiscard(p3)")

    @pytest.mark.parametrize(
        "text",
        [
            "map(p1, {L_df1}, L_df1)",
            "profile(f1, {L})",
            "f1 := carry(f2)",
            "p1 := embrace(p2, p3)",
            "safety(p1, {})",
            "f1 := embrace(m1, p2)",
            "discard(m1)",
        ],
    )
    def test_prefix_classes_enforced(self, text):
        with pytest.raises(ParseError):
            parse_statement(text)


class TestPrinting:
    def test_discard_canonical_form(self):
        assert print_statement(DiscardStmt(tid("p30"), "")) == 'discard(p30, "")'

    def test_carry_canonical_form(self):
        assert print_statement(parse_statement("f2 := p9")) == "f2 := carry(p9)"

    def test_representative_preserved_only_when_explicit(self):
        explicit = parse_statement("f1 := embrace(p1, p2; rep=p2)")
        implicit = parse_statement("f1 := embrace(p1, p2)")
        assert "rep=p2" in print_statement(explicit)
        assert "rep" not in print_statement(implicit)

    def test_label_escaping_roundtrip(self):
        stmt = AssignStmt(
            tid("f1"),
            ExprRename(
                ExprEmbrace((tid("p1"), tid("p2"))),
                Label.parse('He said "hi" \\ bye'),
            ),
        )
        assert parse_statement(print_statement(stmt)) == stmt

    def test_print_script_empty(self):
        assert print_script([]) == ""

    def test_print_parse_identity_on_fixture_scripts(self):
        from linddun_workbench import fixture_path

        for name in ("automotive.step3.ops", "web.step3.ops", "automotive.step4.ops"):
            stmts = parse_script(fixture_path(name).read_text(encoding="utf-8"))
            printed = print_script(stmts)
            assert parse_script(printed) == stmts
            assert print_script(parse_script(printed)) == printed
