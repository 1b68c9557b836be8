import itertools
from typing import Dict, Iterator, List, Optional, Set, Tuple

import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ALPHA, IONIC, ChemGraph, freshen
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import validate_chemical
from com.mhire.app.chemistry.graph_morphisms.graph_morphisms import (
    GraphMorphism, check_embedding, check_matching, compose_morphisms, identity_morphism, is_matchable, is_morphism,
    matching_from_matchable,
)
from com.mhire.app.common.errors import PreconditionError
from com.mhire.app.rewriting.dpo_engine.dpo_engine import (
    apply_scheme, canonical_scheme, instance_to_tuple, is_terminal, pullback_along_embedding,
    pushout_EM, pushout_complement, scheme_violations, tuple_to_instance,
)
from com.mhire.app.rewriting.reaction_category.reaction_category import validate_reaction
from com.mhire.app.utils.format_utility.reaction_format import load_scheme
from com.mhire.app.services.retro_search.retro_search import scheme_matchings
from tests.conftest import RETRO, random_graph

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def two_hydrogens() -> ChemGraph:
    return ChemGraph(
        {"a1": "H", "a2": "H", "b1": "H", "b2": "H"},
        bonds={("a1", "a2"): 1, ("b1", "b2"): 1},
        name="reactants",
    )


def bond_break():
    return load_scheme(RETRO / "schemes" / "h2_bond_break.scheme")


def matching_into(scheme, host, first="a1", second="a2"):
    return GraphMorphism(scheme.left, host, {"p1": first, "p2": second})


# ---------------------------------------------------------------------------
# Limits and colimits
# ---------------------------------------------------------------------------

def test_pullback_of_identities_is_the_graph(water):
    Z, e_star, f_star = pullback_along_embedding(identity_morphism(water), identity_morphism(water))
    assert Z == water
    assert e_star.mapping == f_star.mapping


def test_pushout_of_identities_is_the_graph(water):
    Y, e_star, m_star = pushout_EM(identity_morphism(water), identity_morphism(water))
    assert Y == water
    assert e_star == identity_morphism(water)


def test_pullback_needs_a_cospan(water, hydrogen):
    with pytest.raises(PreconditionError):
        pullback_along_embedding(identity_morphism(water), identity_morphism(hydrogen))


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------

def test_fixture_scheme_is_valid_and_terminal():
    scheme = bond_break()
    assert scheme.name == "h2_bond_break"
    assert scheme_violations(scheme) == []
    assert is_terminal(scheme)


def test_canonical_scheme_keeps_unchanged_bonds(water):
    scheme = canonical_scheme(water, water, {v: v for v in water.vertices})
    assert scheme.interface == water
    assert is_terminal(scheme)


def test_canonical_scheme_rejects_charge_change():
    hydroxide = ChemGraph({"o": "O", "h": "H"}, {"o": -1}, {("o", "h"): 1})
    water_radical = ChemGraph({"o": "O", "h": "H", "e": "alpha"}, bonds={("o", "h"): 1, ("o", "e"): 1})
    with pytest.raises(PreconditionError):
        canonical_scheme(hydroxide, water_radical, {"o": "o", "h": "h"})


def test_fixture_scheme_breaks_one_bond():
    scheme = bond_break()
    assert scheme.left.bonds == {("p1", "p2"): 1}
    assert scheme.interface.bonds == {}
    assert scheme.right.alpha_vertices() == {"s1", "s2"}
    assert scheme.right.bonds == {("p1", "s1"): 1, ("p2", "s2"): 1}


def test_apply_scheme_breaks_the_matched_bond():
    scheme = bond_break()
    inst = apply_scheme(scheme, matching_into(scheme, two_hydrogens()))
    assert inst.D.bonds == {("b1", "b2"): 1}
    assert inst.E.bonds == {("a1", "s1"): 1, ("a2", "s2"): 1, ("b1", "b2"): 1}
    assert inst.E.alpha_vertices() == {"s1", "s2"}
    assert validate_chemical(inst.E) == []


def test_apply_scheme_to_the_other_molecule():
    scheme = bond_break()
    inst = apply_scheme(scheme, matching_into(scheme, two_hydrogens(), "b2", "b1"))
    assert inst.E.bonds == {("a1", "a2"): 1, ("b2", "s1"): 1, ("b1", "s2"): 1}


def test_instance_gives_a_valid_reaction():
    scheme = bond_break()
    r = instance_to_tuple(apply_scheme(scheme, matching_into(scheme, two_hydrogens())))
    assert validate_reaction(r) == []
    assert r.changed_dom == {"a1", "a2"}
    assert r.changed_cod == {"a1", "a2", "s1", "s2"}
    assert r.chem_map == {"a1": "a1", "a2": "a2"}
    assert r.rest_map == {"b1": "b1", "b2": "b2"}


def test_reaction_instance_round_trip():
    scheme = bond_break()
    r = instance_to_tuple(apply_scheme(scheme, matching_into(scheme, two_hydrogens())))
    assert instance_to_tuple(tuple_to_instance(r)) == r


def test_matching_must_start_at_the_left_side(water):
    with pytest.raises(PreconditionError):
        apply_scheme(bond_break(), identity_morphism(water))


# ---------------------------------------------------------------------------
# Pushout complements
# ---------------------------------------------------------------------------

def test_complement_of_an_identity_is_the_graph(water):
    Z, m_hat, e_hat = pushout_complement(identity_morphism(water), identity_morphism(water))
    assert Z == water
    assert e_hat == identity_morphism(water)


def test_complement_removes_a_free_electron():
    site = ChemGraph({"x": ALPHA}, {"x": -1})
    host = ChemGraph({"na": "Na", "e": ALPHA}, {"na": 1, "e": -1})
    empty = ChemGraph({})
    Z, m_hat, e_hat = pushout_complement(GraphMorphism(empty, site, {}), GraphMorphism(site, host, {"x": "e"}))
    assert Z == ChemGraph({"na": "Na"}, {"na": 1})
    assert e_hat.mapping == {"na": "na"}


def test_complement_cannot_leave_a_dangling_bond():
    site = ChemGraph({"x": ALPHA})
    radical = ChemGraph({"o": "O", "h": "H", "p": ALPHA}, bonds={("h", "o"): 1, ("o", "p"): 1})
    with pytest.raises(PreconditionError):
        pushout_complement(GraphMorphism(ChemGraph({}), site, {}), GraphMorphism(site, radical, {"x": "p"}))


def test_complement_rejects_deleting_a_site_matched_onto_an_atom(water):
    site = ChemGraph({"x": ALPHA})
    with pytest.raises(PreconditionError, match="matched onto atom o"):
        pushout_complement(GraphMorphism(ChemGraph({}), site, {}), GraphMorphism(site, water, {"x": "o"}))


def test_complement_keeps_sites_matched_onto_bonded_atoms(water):
    copies = ChemGraph({"x": ALPHA, "y": ALPHA})
    m = GraphMorphism(copies, water, {"x": "o", "y": "h1"})
    Z, m_hat, e_hat = pushout_complement(identity_morphism(copies), m)
    assert Z == water
    assert m_hat.mapping == {"x": "o", "y": "h1"}


# ---------------------------------------------------------------------------
# Universal properties, by enumerating vertex functions
# ---------------------------------------------------------------------------

def vertex_functions(
    dom: ChemGraph, cod: ChemGraph, allowed: Optional[Dict[str, Set[str]]] = None
) -> Iterator[GraphMorphism]:
    """Every vertex function sending atoms to equal atoms; binding sites may go anywhere.

    `allowed` narrows the images of the vertices it names.
    """
    allowed = allowed or {}
    chem, alphas = sorted(dom.chemical_vertices()), sorted(dom.alpha_vertices())
    options = [[w for w in sorted(cod.chemical_vertices()) if cod.atom(w) == dom.atom(v)] for v in chem]
    options += [sorted(cod.vertices)] * len(alphas)
    options = [[w for w in ws if v not in allowed or w in allowed[v]] for v, ws in zip(chem + alphas, options)]
    for images in itertools.product(*options):
        yield GraphMorphism(dom, cod, dict(zip(chem + alphas, images)))


def morphisms(dom: ChemGraph, cod: ChemGraph) -> List[GraphMorphism]:
    return [f for f in vertex_functions(dom, cod) if is_morphism(f)]


def _narrowing(legs: List[Tuple[GraphMorphism, GraphMorphism]]) -> Dict[str, Set[str]]:
    """Images forced on a mediator by equations leg;u == target."""
    allowed: Dict[str, Set[str]] = {}
    for leg, target in legs:
        for v, y in leg.mapping.items():
            allowed[y] = allowed.get(y, {target(v)}) & {target(v)}
    return allowed


def assert_pullback_is_universal(f: GraphMorphism, e: GraphMorphism, sources: List[ChemGraph]):
    Z, e_star, f_star = pullback_along_embedding(f, e)
    assert compose_morphisms(e_star, f) == compose_morphisms(f_star, e)
    assert check_embedding(e_star)
    assert is_morphism(f_star)
    for W in sources:
        by_image: Dict[GraphMorphism, List[GraphMorphism]] = {}
        for q in morphisms(W, e.dom):
            by_image.setdefault(compose_morphisms(q, e), []).append(q)
        for p in morphisms(W, f.dom):
            for q in by_image.get(compose_morphisms(p, f), []):
                mediators = [u for u in vertex_functions(W, Z)
                             if compose_morphisms(u, e_star) == p and compose_morphisms(u, f_star) == q]
                assert len(mediators) == 1
                assert is_morphism(mediators[0])


def assert_pushout_is_universal(m: GraphMorphism, e: GraphMorphism, W: ChemGraph):
    """Cocones that send the added part away from atoms and from the unmatched part of B factor uniquely."""
    Y, e_star, m_star = pushout_EM(m, e)
    assert compose_morphisms(m, e_star) == compose_morphisms(e, m_star)
    assert check_embedding(e_star)
    assert check_matching(m_star)
    B, C = m.cod, e.cod
    added = sorted(C.vertices - e.image())
    shared = {e(a): m(a) for a in m.dom.vertices}
    apart = (B.vertices - m.image()) | B.chemical_vertices()
    cocones = 0
    for beta in morphisms(B, W):
        forced = {c: beta(b) for c, b in shared.items()}
        for images in itertools.product(sorted(W.vertices), repeat=len(added)):
            gamma = GraphMorphism(C, W, {**forced, **dict(zip(added, images))})
            if not is_morphism(gamma) or beta.image(apart) & set(images):
                continue
            cocones += 1
            mediators = [u for u in vertex_functions(Y, W, _narrowing([(e_star, beta), (m_star, gamma)]))
                         if compose_morphisms(e_star, u) == beta and compose_morphisms(m_star, u) == gamma]
            assert len(mediators) == 1
            assert is_morphism(mediators[0])
    assert cocones > 0


def test_pullback_of_a_renamed_carbonyl():
    carbonyl = ChemGraph({"c": "C", "k": "O", "p": ALPHA, "q": ALPHA},
                         bonds={("c", "k"): 2, ("c", "p"): 1, ("c", "q"): 1})
    one_site = carbonyl.restrict({"c", "k", "p"})
    renamed = ChemGraph({"c1": "C", "k1": "O", "s": ALPHA, "t": ALPHA},
                        bonds={("c1", "k1"): 2, ("c1", "s"): 1, ("c1", "t"): 1})
    f = GraphMorphism(renamed, carbonyl, {"c1": "c", "k1": "k", "s": "p", "t": "q"})
    e = GraphMorphism(one_site, carbonyl, {v: v for v in one_site.vertices})
    Z, _, f_star = pullback_along_embedding(f, e)
    assert Z.vertices == {"c1", "k1", "s"}
    assert Z.bonds == {("c1", "k1"): 2, ("c1", "s"): 1}
    assert f_star.mapping == {"c1": "c", "k1": "k", "s": "p"}
    sources = [Z, ChemGraph({"x": ALPHA}), ChemGraph({"y": "C", "x": ALPHA}, bonds={("x", "y"): 1}),
               renamed.restrict({"c1", "k1"})]
    assert_pullback_is_universal(f, e, sources)


def test_pullback_keeps_an_ionic_site():
    salt = ChemGraph({"na": "Na", "e": ALPHA}, {"na": 1, "e": -1}, {("e", "na"): IONIC})
    f = GraphMorphism(salt, salt, {"na": "na", "e": "e"})
    Z, _, _ = pullback_along_embedding(f, identity_morphism(salt))
    assert Z == salt


def test_pushout_attaches_a_site_to_a_renamed_atom():
    interface = ChemGraph({"p": "H"})
    pair = ChemGraph({"a": "H", "b": "H"})
    site = ChemGraph({"p": "H", "s": ALPHA}, bonds={("p", "s"): 1})
    m = GraphMorphism(interface, pair, {"p": "a"})
    e = GraphMorphism(interface, site, {"p": "p"})
    Y, _, m_star = pushout_EM(m, e)
    assert Y.bonds == {("a", "s"): 1}
    assert m_star.mapping == {"p": "a", "s": "s"}
    assert_pushout_is_universal(m, e, Y.relabel({"a": "u", "b": "v", "s": "z"}))
    two_sites = ChemGraph({"u": "H", "z": ALPHA, "v": "H", "y": ALPHA}, bonds={("u", "z"): 1, ("v", "y"): 1})
    assert_pushout_is_universal(m, e, two_sites)


def _random_matching(rng) -> Optional[GraphMorphism]:
    B = random_graph(rng, max_vertices=4)
    subsets = [set(c) for n in range(1, len(B) + 1) for c in itertools.combinations(sorted(B.vertices), n)]
    subsets = [s for s in subsets if is_matchable(B, s)]
    if not subsets:
        return None
    _, m = matching_from_matchable(B, rng.choice(subsets))
    return m


def _with_new_site(A: ChemGraph, rng) -> GraphMorphism:
    """The embedding of A into A plus one neutral binding site on a random atom."""
    s = freshen("s", A.vertices)
    C = A.with_vertex(s, ALPHA, 0)
    chem = sorted(A.chemical_vertices())
    if chem:
        C = C.with_bond(rng.choice(chem), s, 1)
    return GraphMorphism(A, C, {v: v for v in A.vertices})


def test_random_spans_have_universal_pushouts_and_complements(rng):
    spans = 0
    while spans < 200:
        m = _random_matching(rng)
        if m is None:
            continue
        e = _with_new_site(m.dom, rng)
        Y, e_star, m_star = pushout_EM(m, e)
        assert_pushout_is_universal(m, e, Y.relabel({v: f"{v}w" for v in Y.vertices}))
        Z, m_hat, _ = pushout_complement(e, m_star)
        assert Z == m.cod
        assert m_hat.mapping == m.mapping
        spans += 1


def test_random_cospans_have_universal_pullbacks(rng):
    for _ in range(200):
        B = random_graph(rng, max_vertices=5)
        kept = rng.sample(sorted(B.vertices), rng.randint(1, len(B)))
        A = B.restrict(kept).relabel({v: f"{v}a" for v in kept})
        f = GraphMorphism(A, B, {f"{v}a": v for v in kept})
        dropped = set(rng.sample(sorted(B.alpha_vertices()), rng.randint(0, len(B.alpha_vertices()))))
        C = B.restrict(B.vertices - dropped).relabel({v: f"{v}c" for v in B.vertices - dropped})
        e = GraphMorphism(C, B, {f"{v}c": v for v in B.vertices - dropped})
        Z, _, _ = pullback_along_embedding(f, e)
        assert Z.vertices == {f"{v}a" for v in kept if v not in dropped}
        small = sorted(Z.vertices)[:3]
        assert_pullback_is_universal(f, e, [Z.restrict(small), ChemGraph({"x": ALPHA})])


def test_bond_break_keeps_random_graphs_chemical(rng):
    scheme = bond_break()
    applied = 0
    for _ in range(200):
        g = random_graph(rng)
        for m in scheme_matchings(scheme.left, g):
            inst = apply_scheme(scheme, m)
            assert validate_chemical(inst.E) == []
            assert validate_reaction(instance_to_tuple(inst)) == []
            applied += 1
    assert applied > 0
