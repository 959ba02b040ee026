from fractions import Fraction

import pytest

from carnot_heat.catalog import builtin
from carnot_heat.groupdef import emit_group, parse_group

F = Fraction

HEIS = """\
group heisenberg
strata 2 1
Q 3 : -1/2 x1 y2 ; 1/2 x2 y1
"""


def test_parse_heisenberg_equals_builtin():
    result = parse_group(HEIS)
    assert result.ok, result.diagnostics
    assert result.name == "heisenberg"
    assert result.law == builtin("heisenberg").law


def test_round_trip_on_all_builtins():
    for name in ("heisenberg", "htype22", "step3I", "euclidean(3)"):
        g = builtin(name)
        text = emit_group(g.law, g.name)
        back = parse_group(text)
        assert back.ok, back.diagnostics
        assert back.law == g.law
        # emit is canonical: a second round trip reproduces the text
        assert emit_group(back.law, g.name) == text


def test_emit_euclidean_has_empty_q_section():
    g = builtin("euclidean(3)")
    text = emit_group(g.law, "euclidean(3)")
    assert text == "group euclidean(3)\nstrata 3\n"


def test_emit_step3_monomial_counts():
    g = builtin("step3I")
    text = emit_group(g.law, "step3I")
    lines = {l.split(":")[0].strip(): l.split(":", 1)[1] for l in text.splitlines() if l.startswith("Q")}
    assert len(lines["Q 3"].split(";")) == 2
    assert len(lines["Q 4"].split(";")) == 6


def test_decimal_coefficients_convert_exactly():
    src = "group h\nstrata 2 1\nQ 3 : -0.5 x1 y2 ; 0.5 x2 y1\n"
    result = parse_group(src)
    assert result.ok, result.diagnostics
    assert result.law == builtin("heisenberg").law


def test_weight_one_target_is_semantic_error():
    src = "group bad\nstrata 2 1\nQ 1 : 1/2 x2 y1\n"
    result = parse_group(src)
    assert not result.ok
    assert any("weight 1" in d.message for d in result.diagnostics)
    assert all(d.line == 3 for d in result.diagnostics)


def test_non_mixed_term_surfaces_as_diagnostic():
    src = "group bad\nstrata 2 1\nQ 3 : 0.5 x1\n"
    result = parse_group(src)
    assert not result.ok
    assert any("mixed" in d.message for d in result.diagnostics)


def test_unknown_variable_is_error():
    src = "group bad\nstrata 2 1\nQ 3 : 1/2 z1 y2\n"
    result = parse_group(src)
    assert not result.ok
    assert any("unknown variable" in d.message for d in result.diagnostics)


def test_bad_coefficient_is_error():
    src = "group bad\nstrata 2 1\nQ 3 : one x1 y2\n"
    result = parse_group(src)
    assert not result.ok
    assert any("rational literal" in d.message for d in result.diagnostics)


def test_malformed_strata_is_error():
    result = parse_group("group bad\nstrata two\n")
    assert not result.ok
    assert any("strata" in d.message for d in result.diagnostics)


def test_missing_strata_reported():
    result = parse_group("group bad\n")
    assert not result.ok
    assert any("missing strata" in d.message for d in result.diagnostics)


def test_comments_and_blank_lines_ignored():
    src = "# a comment\n\ngroup h  # trailing\nstrata 2 1\nQ 3 : -1/2 x1 y2 ; 1/2 x2 y1\n"
    result = parse_group(src)
    assert result.ok, result.diagnostics


def test_diagnostics_carry_positions_inside_source():
    src = "group bad\nstrata 2 1\nQ 9 : 1 x1 y1\n"
    result = parse_group(src)
    assert not result.ok
    for d in result.diagnostics:
        assert 1 <= d.line <= 3
        assert d.column >= 1


def test_repeated_variables_give_powers():
    src = "group cubicish\nstrata 2 1 1\nQ 3 : 1/2 x1 y2 ; -1/2 x2 y1\nQ 4 : 1/2 x1 y3 ; -1/2 x3 y1 ; 1/12 x1 x1 y2 ; -1/12 x1 x2 y1 ; -1/12 x1 y1 y2 ; 1/12 x2 y1 y1\n"
    result = parse_group(src)
    assert result.ok, result.diagnostics
    assert result.law == builtin("step3I").law
