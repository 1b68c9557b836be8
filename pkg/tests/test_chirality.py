import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.services.chirality.chirality import (
    OrientedGraph, are_chiral, canonical_tetrahedron, label_isomorphisms, reflected, validate_orientation,
    verdict_triple,
)
from tests.conftest import oriented


def _methane() -> ChemGraph:
    hydrogens = ("h1", "h2", "h3", "h4")
    return ChemGraph({"c": "C", **{h: "H" for h in hydrogens}}, bonds={("c", h): 1 for h in hydrogens})


# ---------------------------------------------------------------------------
# Orbit representatives
# ---------------------------------------------------------------------------

def test_even_permutations_share_a_representative():
    assert canonical_tetrahedron(("a", "b", "c", "d")) == ("a", "b", "c", "d")
    assert canonical_tetrahedron(("b", "c", "a", "d")) == ("a", "b", "c", "d")


def test_odd_permutations_change_orbit():
    assert canonical_tetrahedron(("b", "a", "c", "d")) == ("a", "b", "d", "c")
    assert canonical_tetrahedron(reflected(("a", "b", "c", "d"))) == ("a", "b", "d", "c")


def test_oriented_graph_lookup():
    og = OrientedGraph.of(_methane(), [("h1", "h2", "h3")], [("h1", "h2", "h3", "h4")])
    assert og.has_triangle("h3", "h1", "h2")
    assert og.has_tetrahedron("h2", "h3", "h1", "h4")
    assert not og.has_tetrahedron("h2", "h1", "h3", "h4")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_tetrahedron_faces_must_be_triangles():
    faces = [("h1", "h2", "h3"), ("h1", "h2", "h4"), ("h1", "h3", "h4")]
    og = OrientedGraph.of(_methane(), faces, [("h1", "h2", "h3", "h4")])
    violations = validate_orientation(og)
    assert [v.clause for v in violations] == ["tet-face"]
    assert violations[0].vertices == ["h2", "h3", "h4"]


def test_unknown_vertices_in_orientation():
    og = OrientedGraph.of(_methane(), [("h1", "h2", "zz")])
    assert [v.clause for v in validate_orientation(og)] == ["tri-vertex"]


@pytest.mark.parametrize("name", [
    "butanolL.cg", "butanolR.cg", "isopentaneL.cg", "isopentaneR.cg", "dichloroalleneL.cg", "dichloroalleneR.cg",
])
def test_fixtures_are_consistent(name):
    assert validate_orientation(oriented(name)) == []


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

def test_butanol_enantiomers_are_chiral():
    verdict = verdict_triple(oriented("butanolL.cg"), oriented("butanolR.cg"))
    assert verdict.preserving is None
    assert verdict.reflecting is not None
    assert verdict.chiral
    assert str(verdict) == "PRESERVING=no REFLECTING=yes CHIRAL=yes"


def test_isopentane_is_not_chiral():
    verdict = verdict_triple(oriented("isopentaneL.cg"), oriented("isopentaneR.cg"))
    assert verdict.preserving is not None
    assert verdict.reflecting is not None
    assert not verdict.chiral


def test_dichloroallene_is_chiral():
    left, right = oriented("dichloroalleneL.cg"), oriented("dichloroalleneR.cg")
    assert len(list(label_isomorphisms(left.base, right.base))) == 2
    assert are_chiral(left, right)


def test_a_molecule_is_not_chiral_to_itself():
    butanol = oriented("butanolL.cg")
    verdict = verdict_triple(butanol, butanol)
    assert verdict.preserving is not None
    assert not verdict.chiral


def test_different_molecules_have_no_verdict():
    verdict = verdict_triple(oriented("butanolL.cg"), oriented("isopentaneL.cg"))
    assert verdict.preserving is None
    assert verdict.reflecting is None
    assert not verdict.chiral
