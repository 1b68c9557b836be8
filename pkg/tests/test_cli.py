import json

import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.chemistry.graph_morphisms.graph_morphisms import GraphMorphism
from com.mhire.app.main import run
from com.mhire.app.services.react_bridge.react_bridge import translate
from com.mhire.app.utils.format_utility.graph_format import load_graph
from com.mhire.app.utils.format_utility.reaction_format import load_scheme, print_morphism, print_reaction
from com.mhire.app.utils.format_utility.term_format import parse_term
from tests.conftest import CHIRALITY, FIXTURES, RETRO


def _term_file(tmp_path, text, name="t.term"):
    path = tmp_path / name
    path.write_text(text + "\n", encoding="utf-8")
    return str(path)


def _json(capsys):
    return json.loads(capsys.readouterr().out.strip())


# ---------------------------------------------------------------------------
# Parser and envelopes
# ---------------------------------------------------------------------------

def test_missing_subcommand_is_an_input_error():
    assert run([]) == 2


def test_unknown_option_is_an_input_error():
    assert run(["validate", "--frobnicate", str(FIXTURES / "water.cg")]) == 2


def test_missing_file_reports_on_stderr(capsys):
    assert run(["validate", str(FIXTURES / "absent.cg")]) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "error: cannot read" in captured.err


def test_error_envelope_in_json(capsys):
    assert run(["--format", "json-lines", "validate", str(FIXTURES / "absent.cg")]) == 2
    content = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert content["success"] is False
    assert content["code"] == 2
    assert content["resource"] == "validate"


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def test_validate_chemical_graph(capsys):
    assert run(["validate", str(FIXTURES / "water.cg")]) == 0
    assert capsys.readouterr().out.startswith("water: chemical (3 vertices, 2 bonds, 1 components)")


def test_validate_reports_violations(capsys):
    assert run(["--format", "json-lines", "validate", str(FIXTURES / "overvalent_carbon.cg")]) == 1
    content = _json(capsys)
    assert content["data"]["chemical"] is False
    assert content["data"]["violations"]


def test_validate_molecular_flag():
    assert run(["validate", str(FIXTURES / "benzyl_typing.cg")]) == 0
    assert run(["validate", "--molecular", str(FIXTURES / "benzyl_typing.cg")]) == 1


def test_validate_oriented_graph():
    assert run(["validate", str(CHIRALITY / "butanolL.cg")]) == 0


def test_valence_file_option(monkeypatch, tmp_path):
    monkeypatch.setenv("VALENCE_FILE", str(FIXTURES / "valences.txt"))
    assert run(["--valences", str(FIXTURES / "valences.txt"), "validate", str(FIXTURES / "water.cg")]) == 0
    assert run(["--valences", str(tmp_path / "absent.txt"), "validate", str(FIXTURES / "water.cg")]) == 2


# ---------------------------------------------------------------------------
# apply-term, normalize, equal
# ---------------------------------------------------------------------------

def test_apply_term(tmp_path, capsys):
    term = _term_file(tmp_path, "C(h1,h2|a,b)")
    assert run(["apply-term", str(FIXTURES / "hydrogen.cg"), term]) == 0
    out = capsys.readouterr().out
    assert "atom a alpha" in out
    assert "bond a h1 1" in out


def test_apply_term_trace(tmp_path, capsys):
    term = _term_file(tmp_path, "C(h1,h2|a,b);R(a>x)")
    assert run(["--format", "json-lines", "apply-term", "--trace", str(FIXTURES / "hydrogen.cg"), term]) == 0
    content = _json(capsys)
    assert content["data"]["length"] == 2
    assert len(content["data"]["trace"]) == 1


def test_ill_typed_term(tmp_path, capsys):
    term = _term_file(tmp_path, "C(h1,h2|a,b)")
    assert run(["apply-term", str(FIXTURES / "water.cg"), term]) == 2
    assert "step 1" in capsys.readouterr().err


def test_normalize(tmp_path, capsys):
    term = _term_file(tmp_path, "C(h1,h2|a,b);~C(h1,h2|a,b)")
    assert run(["normalize", term, "--graph", str(FIXTURES / "hydrogen.cg")]) == 0
    assert capsys.readouterr().out.strip() == "S(h1);S(h2)"


def test_equal_worked_example(capsys):
    code = run([
        "equal", str(FIXTURES / "benzyl_sequence.term"), str(FIXTURES / "benzyl_nf.term"),
        "--graph", str(FIXTURES / "benzyl_typing.cg"),
    ])
    assert code == 0
    assert capsys.readouterr().out.strip() == "EQUAL"


def test_different_terms(tmp_path, capsys):
    left = _term_file(tmp_path, "C(h1,h2|a,b)", "left.term")
    right = _term_file(tmp_path, "C(h1,h2|b,a)", "right.term")
    assert run(["equal", left, right, "--graph", str(FIXTURES / "hydrogen.cg"), "--explain"]) == 1
    out = capsys.readouterr().out
    assert out.startswith("DIFFERENT")
    assert "normal form:" in out


# ---------------------------------------------------------------------------
# translate, decompose
# ---------------------------------------------------------------------------

def test_translate(tmp_path, capsys):
    term = _term_file(tmp_path, "C(h1,h2|a,b)")
    assert run(["--format", "json-lines", "translate", term, "--graph", str(FIXTURES / "hydrogen.cg")]) == 0
    content = _json(capsys)
    assert content["data"]["image_form"] is True
    assert "changed-cod a b h1 h2" in content["data"]["reaction"]


def test_decompose(tmp_path, capsys, hydrogen):
    path = tmp_path / "split.reaction"
    path.write_text(print_reaction(translate(parse_term("C(h1,h2|a,b)"), hydrogen)), encoding="utf-8")
    assert run(["--format", "json-lines", "decompose", str(path)]) == 0
    assert _json(capsys)["data"]["length"] > 0


# ---------------------------------------------------------------------------
# apply-scheme
# ---------------------------------------------------------------------------

def test_apply_scheme(tmp_path, capsys):
    scheme_path = RETRO / "schemes" / "h2_bond_break.scheme"
    scheme = load_scheme(scheme_path)
    reactants = ChemGraph({"a1": "H", "a2": "H"}, bonds={("a1", "a2"): 1})
    m = GraphMorphism(scheme.left, reactants, {"p1": "a1", "p2": "a2"})
    matching = tmp_path / "m.morphism"
    matching.write_text(print_morphism(m), encoding="utf-8")
    assert run(["apply-scheme", str(scheme_path), str(matching), "--reaction"]) == 0
    assert capsys.readouterr().out.startswith("reaction")


def test_apply_scheme_wrong_matching(tmp_path):
    scheme_path = RETRO / "schemes" / "h2_bond_break.scheme"
    scheme = load_scheme(scheme_path)
    matching = tmp_path / "m.morphism"
    matching.write_text(print_morphism(GraphMorphism(scheme.right, scheme.right, {
        v: v for v in scheme.right.vertices})), encoding="utf-8")
    assert run(["apply-scheme", str(scheme_path), str(matching)]) == 2


# ---------------------------------------------------------------------------
# chiral
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("left, right, code, verdict", [
    ("butanolL.cg", "butanolR.cg", 0, "PRESERVING=no REFLECTING=yes CHIRAL=yes"),
    ("isopentaneL.cg", "isopentaneR.cg", 1, "PRESERVING=yes REFLECTING=yes CHIRAL=no"),
    ("dichloroalleneL.cg", "dichloroalleneR.cg", 0, "PRESERVING=no REFLECTING=yes CHIRAL=yes"),
])
def test_chiral(capsys, left, right, code, verdict):
    assert run(["chiral", str(CHIRALITY / left), str(CHIRALITY / right)]) == code
    assert capsys.readouterr().out.strip() == verdict


# ---------------------------------------------------------------------------
# retro-step
# ---------------------------------------------------------------------------

def test_retro_step_writes_bundles(tmp_path, capsys):
    out = tmp_path / "steps"
    code = run([
        "retro-step", "--target", str(RETRO / "target.cg"), "--rules", str(RETRO / "rules.terms"),
        "--schemes", str(RETRO / "schemes"), "--env", str(RETRO / "environment.cg"), "--out", str(out),
    ])
    assert code == 0
    bundle = out / "step_1"
    for name in ("target.cg", "synthons.cg", "equivalents.cg", "byproduct.cg",
                 "disconnection.term", "matching.morphism", "reaction.reaction"):
        assert (bundle / name).is_file()
    assert load_graph(bundle / "target.cg") == load_graph(RETRO / "target.cg")
    assert capsys.readouterr().out.strip().endswith("2 steps")


def test_retro_step_without_environment(tmp_path, capsys):
    out = tmp_path / "steps"
    code = run([
        "retro-step", "--target", str(RETRO / "target.cg"), "--rules", str(RETRO / "rules.terms"),
        "--schemes", str(RETRO / "schemes"), "--out", str(out),
    ])
    assert code == 0
    assert capsys.readouterr().out.strip().endswith("1 steps")
    assert load_graph(out / "step_1" / "byproduct.cg") == ChemGraph({})


def test_retro_step_missing_scheme_directory(tmp_path):
    code = run([
        "retro-step", "--target", str(RETRO / "target.cg"), "--rules", str(RETRO / "rules.terms"),
        "--schemes", str(tmp_path / "nowhere"), "--out", str(tmp_path / "steps"),
    ])
    assert code == 2


def test_retro_step_bad_bounds(tmp_path):
    code = run([
        "retro-step", "--target", str(RETRO / "target.cg"), "--rules", str(RETRO / "rules.terms"),
        "--schemes", str(RETRO / "schemes"), "--bounds", "depth=2", "--out", str(tmp_path / "steps"),
    ])
    assert code == 2
