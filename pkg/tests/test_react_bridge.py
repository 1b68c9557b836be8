import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.common.errors import PreconditionError
from com.mhire.app.rewriting.reaction_category.reaction_category import (
    Reaction, compose, identity, touch, validate_reaction,
)
from com.mhire.app.services.disconnection_engine.disconnection_engine import Kind, Term, eval_term, type_term
from com.mhire.app.services.react_bridge.react_bridge import decompose, image_check, translate
from com.mhire.app.utils.format_utility.term_format import parse_term
from tests.conftest import fixture_graph, random_graph, random_term


def _relabelled(r: Reaction, mapping) -> Reaction:
    """r followed by the isomorphism renaming its codomain along `mapping`."""
    iso = Reaction(r.cod, r.cod.relabel(mapping), frozenset(), frozenset(), {},
                   {v: mapping.get(v, v) for v in r.cod.vertices})
    return compose(r, iso)


# ---------------------------------------------------------------------------
# translate
# ---------------------------------------------------------------------------

def test_translate_empty_term_is_identity(water):
    assert translate(Term(), water) == identity(water)


def test_translate_touch(water):
    assert translate(parse_term("S(o)"), water) == touch(water, {"o"})


def test_translate_needs_a_domain():
    with pytest.raises(PreconditionError):
        translate(parse_term("S(o)"))


def test_translate_typed_term(hydrogen):
    t = type_term(parse_term("C(h1,h2|a,b)"), hydrogen)
    r = translate(t)
    assert r.cod == t.cod
    assert validate_reaction(r) == []
    assert image_check(r)


def test_translate_rename_changes_only_the_site(hydrogen):
    r = translate(parse_term("C(h1,h2|a,b);R(a>x)"), hydrogen)
    assert r.changed_cod == {"h1", "h2", "x", "b"}
    assert r.cod == eval_term(parse_term("C(h1,h2|a,b);R(a>x)"), hydrogen)


def test_translate_functorial_on_sequences(hydrogen):
    first, second = parse_term("C(h1,h2|a,b)"), parse_term("S(a)")
    middle = eval_term(first, hydrogen)
    assert translate(first.then(second), hydrogen) == compose(translate(first, hydrogen), translate(second, middle))


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------

def test_decompose_image_of_translate(hydrogen):
    r = translate(parse_term("C(h1,h2|a,b)"), hydrogen)
    t, iota = decompose(r)
    assert image_check(iota)
    assert compose(translate(t), iota) == r


def test_decompose_ionic_reaction():
    salt = fixture_graph("sodium_chloride.cg")
    r = translate(parse_term("I(na,cl)"), salt)
    t, iota = decompose(r)
    assert compose(translate(t), iota) == r


def test_decompose_identity(water):
    t, iota = decompose(identity(water))
    assert compose(translate(t), iota) == identity(water)


def test_decompose_with_relabelled_codomain(hydrogen):
    r = _relabelled(translate(parse_term("C(h1,h2|a,b)"), hydrogen), {"h1": "k1", "a": "y"})
    assert validate_reaction(r) == []
    assert not image_check(r)
    t, iota = decompose(r)
    assert not image_check(iota)
    assert iota.cod == r.cod
    assert compose(translate(t), iota) == r


def test_decompose_rejects_invalid_reactions(hydrogen):
    chloride = ChemGraph({"h1": "Cl", "h2": "H"}, bonds={("h1", "h2"): 1})
    r = Reaction(hydrogen, chloride, {"h1"}, {"h1"}, {"h1": "h1"}, {"h2": "h2"})
    with pytest.raises(PreconditionError):
        decompose(r)


def test_decompose_round_trip_on_random_breaks(benzyl, rng):
    pool = ["C(z,u|a,b)", "C(v,w|c,d)", "C(r,u|i,j)", "S(r)", "S(w)"]
    for _ in range(15):
        words = rng.sample(pool, rng.randint(1, len(pool)))
        r = translate(parse_term(";".join(words)), benzyl)
        t, iota = decompose(r)
        assert compose(translate(t), iota) == r


def test_decompose_touch_of_an_ion_with_an_unchanged_partner():
    salt = fixture_graph("sodium_chloride.cg")
    r = translate(parse_term("S(cl)"), salt)
    assert validate_reaction(r) == []
    t, iota = decompose(r)
    assert image_check(iota)
    assert compose(translate(t), iota) == r
    assert translate(t).changed_dom == {"cl"}


def test_decompose_bond_break_next_to_an_ionic_partner():
    lye = ChemGraph({"na": "Na", "o": "O", "h": "H"}, {"na": 1, "o": -1}, {("na", "o"): "ionic", ("o", "h"): 1})
    r = translate(parse_term("C(o,h|a,b)"), lye)
    t, iota = decompose(r)
    assert compose(translate(t), iota) == r


def test_decompose_round_trip_on_random_reactions(rng):
    kinds = set()
    for n in range(1000):
        g = random_graph(rng)
        term = random_term(g, rng)
        kinds.update(gen.kind for gen in term)
        r = translate(term, g)
        if n % 2:
            moved = rng.sample(sorted(r.cod.vertices), rng.randint(1, len(r.cod)))
            r = _relabelled(r, {v: f"{v}y" for v in moved})
        assert validate_reaction(r) == []
        t, iota = decompose(r)
        assert compose(translate(t), iota) == r, f"{term} on {g.describe()}"
    assert {Kind.TOUCH, Kind.RENAME, Kind.E_NEG, Kind.E_POS, Kind.ION, Kind.COV} <= kinds
