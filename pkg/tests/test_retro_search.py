import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.common.errors import ConfigurationError, DomainError, PreconditionError, SearchError
from com.mhire.app.rewriting.reaction_category.reaction_category import identity
from com.mhire.app.services.disconnection_engine.disconnection_engine import Term
from com.mhire.app.services.retro_search.retro_search import (
    EMPTY, DiscMorphism, Environment, MatchMorphism, ReactMorphism, RetroSequence, SearchBounds, embed_match,
    para_compose, para_identity, search_step, validate_sequence, validate_step,
)
from com.mhire.app.services.retro_search.retro_search_router import load_schemes
from com.mhire.app.utils.fingerprint_utility.fingerprint import LookupOracle, fingerprint
from com.mhire.app.utils.format_utility.graph_format import load_graph, load_graphs
from com.mhire.app.utils.format_utility.term_format import load_terms, parse_term
from tests.conftest import RETRO


@pytest.fixture
def target():
    return load_graph(RETRO / "target.cg")


@pytest.fixture
def rules():
    return load_terms(RETRO / "rules.terms")


@pytest.fixture
def environment():
    return Environment(tuple(load_graphs(RETRO / "environment.cg")))


@pytest.fixture
def schemes():
    return load_schemes(RETRO / "schemes")


@pytest.fixture
def oracle(hydrogen, target):
    return LookupOracle({fingerprint(hydrogen): {fingerprint(target)}})


# ---------------------------------------------------------------------------
# Environments and parameterised morphisms
# ---------------------------------------------------------------------------

def test_environment_copies_are_named_by_molecule_and_copy(environment):
    summand = environment.summand((2,))
    assert summand.vertices == {"x1_1_1", "x2_1_1", "x1_1_2", "x2_1_2"}
    assert summand.bond("x1_1_2", "x2_1_2") == 1
    assert environment.summand((0,)) == EMPTY


def test_environment_copies_avoid_taken_names(environment):
    summand = environment.summand((1,), taken={"x1_1_1"})
    assert summand.vertices == {"x1_1_1_1", "x2_1_1"}


def test_environment_multiplicity_must_fit(environment):
    with pytest.raises(DomainError):
        environment.summand((1, 1))
    with pytest.raises(DomainError):
        environment.summand((-1,))


def test_environment_rejects_binding_sites():
    radical = ChemGraph({"o": "O", "h": "H", "p": "alpha"}, bonds={("o", "h"): 1, ("o", "p"): 1})
    clauses = {v.clause for v in Environment((radical,)).violations()}
    assert "environment-1-molecular" in clauses


def test_disc_identity_is_a_unit(hydrogen):
    x = DiscMorphism(parse_term("C(h1,h2|a,b)"), hydrogen, EMPTY, ())
    assert para_compose(para_identity(DiscMorphism, hydrogen), x) == x


def test_multiplicities_add_under_composition(hydrogen):
    x = DiscMorphism(Term(), hydrogen, EMPTY, (1,))
    y = DiscMorphism(Term(), hydrogen, EMPTY, (2,))
    assert para_compose(x, y).multiplicity == (3,)
    with pytest.raises(PreconditionError):
        para_compose(x, DiscMorphism(Term(), hydrogen, EMPTY, (1, 0)))


def test_composition_needs_the_same_kind(water):
    with pytest.raises(PreconditionError):
        para_compose(para_identity(DiscMorphism, water), para_identity(ReactMorphism, water))


def test_react_identity_is_a_unit(water):
    unit = para_identity(ReactMorphism, water)
    assert para_compose(unit, unit) == unit


def test_identity_match_embeds_as_identity_reaction(water):
    embedded = embed_match(para_identity(MatchMorphism, water))
    assert embedded.reaction == identity(water)
    assert embedded == para_identity(ReactMorphism, water)


def test_unknown_variant():
    with pytest.raises(DomainError):
        para_identity(int, EMPTY)


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

def test_bounds_come_from_config(monkeypatch):
    monkeypatch.setenv("SEARCH_MAX_CANDIDATES", "7")
    assert SearchBounds.from_config().max_candidates == 7


def test_bounds_overrides():
    bounds = SearchBounds.from_config().with_overrides("term_length=4, multiplicity=2")
    assert (bounds.max_term_length, bounds.max_multiplicity) == (4, 2)
    assert SearchBounds.from_config().with_overrides(None) == SearchBounds.from_config()


@pytest.mark.parametrize("text", ["depth=3", "timeout=soon", "candidates=-1", "multiplicity"])
def test_bad_bounds(text):
    with pytest.raises(ConfigurationError):
        SearchBounds.from_config().with_overrides(text)


# ---------------------------------------------------------------------------
# Step search
# ---------------------------------------------------------------------------

def test_search_needs_rules(target, schemes):
    with pytest.raises(SearchError):
        search_step(target, [], schemes)


def test_search_needs_schemes_or_oracle(target, rules):
    with pytest.raises(SearchError):
        search_step(target, rules)


def test_search_needs_a_chemical_target(rules, schemes):
    overcharged = ChemGraph({"h": "H", "p": "alpha"}, {"p": 2}, {("h", "p"): 1})
    with pytest.raises(PreconditionError):
        search_step(overcharged, rules, schemes)


def test_search_without_environment_finds_the_bond_break(target, rules, schemes, hydrogen):
    result = search_step(target, rules, schemes)
    assert not result.truncated
    assert len(result.steps) == 1
    step = result.steps[0]
    assert validate_step(step) == []
    assert step.disconnection == rules[0]
    assert step.synthons == hydrogen
    assert step.equivalents == hydrogen
    assert step.matching.multiplicity == ()
    assert step.matching.matching.mapping == {"h1": "h1", "h2": "h2"}
    assert step.byproduct == EMPTY
    assert step.reaction.reaction.changed_dom == {"h1", "h2"}
    assert step.reaction.reaction.cod == target


def test_environment_adds_a_spectator_step(target, rules, schemes, environment):
    result = search_step(target, rules, schemes, environment=environment)
    assert not result.truncated
    assert len(result.steps) == 2
    for step in result.steps:
        assert validate_step(step) == []
    spectator = [s for s in result.steps if len(s.byproduct)]
    assert len(spectator) == 1
    assert spectator[0].matching.multiplicity == (1,)
    assert len(spectator[0].equivalents) == 4
    assert fingerprint(spectator[0].byproduct) == fingerprint(load_graph(RETRO / "environment.cg"))


def test_oracle_search(target, rules, oracle, hydrogen):
    result = search_step(target, rules, oracle=oracle)
    assert len(result.steps) == 1
    step = result.steps[0]
    assert validate_step(step) == []
    assert step.equivalents == hydrogen
    assert step.byproduct == EMPTY
    assert validate_sequence(RetroSequence(target, ((Environment(), step.reaction),))) == []


def test_oracle_without_a_prediction_finds_nothing(target, rules, water):
    oracle = LookupOracle({fingerprint(water): {fingerprint(target)}})
    assert search_step(target, rules, oracle=oracle).steps == []


def test_long_rules_are_skipped(target, rules, schemes, environment):
    bounds = SearchBounds.from_config().with_overrides("term_length=0")
    result = search_step(target, rules, schemes, environment=environment, bounds=bounds)
    assert result.steps == []
    assert not result.truncated


def test_candidate_bound_truncates(target, rules, schemes, environment):
    bounds = SearchBounds.from_config().with_overrides("candidates=1")
    result = search_step(target, rules, schemes, environment=environment, bounds=bounds)
    assert result.truncated
    assert result.reason == "candidate bound 1"
    assert len(result.steps) == 1
