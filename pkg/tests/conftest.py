import random
from pathlib import Path
from typing import List, Optional, Tuple

import pytest

from com.mhire.app.chemistry.chem_graph.chem_graph import ALPHA, IONIC, ChemGraph
from com.mhire.app.config.config import Config
from com.mhire.app.services.disconnection_engine.disconnection_axioms import candidate_generators
from com.mhire.app.services.disconnection_engine.disconnection_engine import (
    Generator, Term, Undefined, apply_generator, is_well_typed, touch,
)
from com.mhire.app.services.react_bridge.react_bridge import translate
from com.mhire.app.utils.format_utility.graph_format import load_graph, load_oriented_graph

# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

PROJECT_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = PROJECT_ROOT / "fixtures"
CHIRALITY = FIXTURES / "chirality"
RETRO = FIXTURES / "retro"

CONFIG_VARIABLES = (
    "VALENCE_FILE", "LOG_LEVEL", "SEARCH_MAX_TERM_LENGTH", "SEARCH_MAX_MULTIPLICITY",
    "SEARCH_MAX_CANDIDATES", "SEARCH_TIMEOUT_SECONDS", "NF_MAX_DUMMY_PERMUTATIONS", "NF_SEARCH_MAX_STATES",
)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(autouse=True)
def clean_config(monkeypatch):
    """Every test sees the built-in defaults unless it sets variables itself."""
    for name in CONFIG_VARIABLES:
        monkeypatch.delenv(name, raising=False)
    Config.reset()
    yield
    Config.reset()


@pytest.fixture
def rng():
    return random.Random(20240611)


def fixture_graph(name: str) -> ChemGraph:
    return load_graph(FIXTURES / name)


def oriented(name: str):
    return load_oriented_graph(CHIRALITY / name)


@pytest.fixture
def water():
    return fixture_graph("water.cg")


@pytest.fixture
def hydrogen():
    return fixture_graph("hydrogen.cg")


@pytest.fixture
def benzyl():
    return fixture_graph("benzyl_typing.cg")


# ---------------------------------------------------------------------------
# Random chemical graphs and terms
# ---------------------------------------------------------------------------

FRAGMENTS = {
    "hydrogen": ({"h1": "H", "h2": "H"}, {}, {("h1", "h2"): 1}),
    "water": ({"o": "O", "h1": "H", "h2": "H"}, {}, {("h1", "o"): 1, ("h2", "o"): 1}),
    "hydroxide": ({"o": "O", "h": "H"}, {"o": -1}, {("h", "o"): 1}),
    "salt": ({"na": "Na", "cl": "Cl"}, {"na": 1, "cl": -1}, {("cl", "na"): IONIC}),
    "lye": ({"na": "Na", "o": "O", "h": "H"}, {"na": 1, "o": -1}, {("na", "o"): IONIC, ("h", "o"): 1}),
    "carbonyl": ({"c": "C", "k": "O", "p": ALPHA, "q": ALPHA}, {},
                 {("c", "k"): 2, ("c", "p"): 1, ("c", "q"): 1}),
    "chlorine_site": ({"cl": "Cl", "p": ALPHA}, {}, {("cl", "p"): 1}),
    "hydroxyl_site": ({"o": "O", "h": "H", "p": ALPHA}, {}, {("h", "o"): 1, ("o", "p"): 1}),
    "electron": ({"e": ALPHA}, {"e": -1}, {}),
    "sodium": ({"na": "Na"}, {"na": 1}, {}),
    "chloride": ({"cl": "Cl"}, {"cl": -1}, {}),
    "sodium_site": ({"na": "Na", "e": ALPHA}, {"na": 1, "e": -1}, {("e", "na"): IONIC}),
}


def _fragment(name: str, k: int) -> ChemGraph:
    """Copy k of a fragment; it names its vertex v as `<v>x<k>`."""
    atoms, charges, bonds = FRAGMENTS[name]
    return ChemGraph(atoms, charges, bonds).relabel({v: f"{v}x{k}" for v in atoms})


def random_graph(rng: random.Random, max_vertices: int = 12) -> ChemGraph:
    """A chemical graph of up to four fragments."""
    g = ChemGraph({}, name="random")
    for k in range(rng.randint(1, 4)):
        part = _fragment(rng.choice(sorted(FRAGMENTS)), k)
        if len(g) + len(part) > max_vertices:
            break
        g = g.disjoint_union(part)
    return g


def every_fragment() -> ChemGraph:
    g = ChemGraph({}, name="fragments")
    for k, name in enumerate(sorted(FRAGMENTS)):
        g = g.disjoint_union(_fragment(name, k))
    return g


def _first_applicable(pool: List[Generator], g: ChemGraph) -> Optional[Tuple[Generator, ChemGraph]]:
    for gen in pool:
        out = apply_generator(gen, g)
        if not isinstance(out, Undefined):
            return gen, out
    return None


def random_term(g: ChemGraph, rng: random.Random, max_length: int = 8) -> Term:
    """A well-typed term on `g`, each step drawing a kind uniformly among those that apply."""
    generators: List[Generator] = []
    current = g
    for step in range(rng.randint(1, max_length)):
        options = candidate_generators(current, f"n{2 * step}", f"n{2 * step + 1}")
        kinds = sorted(k for k, pool in options.items() if pool)
        rng.shuffle(kinds)
        for kind in kinds:
            pool = list(options[kind])
            rng.shuffle(pool)
            found = _first_applicable(pool, current)
            if found is not None:
                generators.append(found[0])
                current = found[1]
                break
    return Term(tuple(generators))


def term_variants(t: Term, g: ChemGraph, rng: random.Random) -> List[Term]:
    """Terms built from `t`: a trailing touch, a trailing cancelling pair and a well-typed shuffle.

    The first two always have the reaction of `t`; the shuffle may not.
    """
    variants: List[Term] = []
    r = translate(t, g)
    if r.changed_cod:
        variants.append(t.then(Term.of(touch(rng.choice(sorted(r.changed_cod))))))

    pairs = []
    for kind, pool in candidate_generators(r.cod, "m0", "m1").items():
        if kind in ("S", "R"):
            continue
        for gen in pool:
            if not set(gen.names()) & r.cod.vertices <= r.changed_cod:
                continue
            out = apply_generator(gen, r.cod)
            if not isinstance(out, Undefined) and not isinstance(apply_generator(gen.dagger(), out), Undefined):
                pairs.append(gen)
    if pairs:
        gen = rng.choice(pairs)
        variants.append(t.then(Term.of(gen, gen.dagger())))

    shuffled = Term(tuple(rng.sample(t.generators, len(t))))
    if is_well_typed(shuffled, g):
        variants.append(shuffled)
    return variants
