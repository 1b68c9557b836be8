import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import ChemGraphValidator
from com.mhire.app.chemistry.chem_graph.valence_table import ALPHA, ValenceTable
from com.mhire.app.common.errors import DomainError, PreconditionError, TermTypeError

logger = logging.getLogger(__name__)


class Kind:
    # Structural generators
    ID = "id"
    TOUCH = "S"
    RENAME = "R"

    # Disconnection rules
    E_NEG = "E-"
    E_POS = "E+"
    ION = "I"
    COV = "C"


RULE_KINDS = (Kind.E_NEG, Kind.E_POS, Kind.ION, Kind.COV)

_SLOTS = {
    Kind.ID: (),
    Kind.TOUCH: ("u",),
    Kind.RENAME: ("u", "v"),
    Kind.E_NEG: ("u", "a", "b"),
    Kind.E_POS: ("u", "v"),
    Kind.ION: ("u", "v"),
    Kind.COV: ("u", "v", "a", "b"),
}


@dataclass(frozen=True)
class Generator:
    """One letter of the term language: id, S(u), R(u>v), a disconnection rule or its connection."""
    kind: str
    u: Optional[str] = None
    v: Optional[str] = None
    a: Optional[str] = None
    b: Optional[str] = None
    bar: bool = False

    def __post_init__(self):
        if self.kind not in _SLOTS:
            raise DomainError(f"unknown generator kind {self.kind!r}")
        slots = _SLOTS[self.kind]
        for slot in ("u", "v", "a", "b"):
            given = getattr(self, slot) is not None
            if given != (slot in slots):
                raise DomainError(f"generator {self.kind} has the wrong vertex slots")
        if self.bar and self.kind not in RULE_KINDS:
            raise DomainError(f"generator {self.kind} has no connection form")
        names = self.names()
        if self.kind != Kind.RENAME and len(set(names)) != len(names):
            raise DomainError(f"vertex names of {self} are not pairwise distinct")

    def names(self) -> Tuple[str, ...]:
        return tuple(getattr(self, slot) for slot in _SLOTS[self.kind])

    @property
    def is_rule(self) -> bool:
        return self.kind in RULE_KINDS

    @property
    def changed(self) -> Tuple[str, ...]:
        """The vertices whose labels the rule changes."""
        if self.kind in (Kind.E_POS, Kind.ION, Kind.COV):
            return (self.u, self.v)
        if self.kind in (Kind.E_NEG, Kind.TOUCH):
            return (self.u,)
        return ()

    @property
    def added(self) -> Tuple[str, ...]:
        """The binding sites a disconnection creates (a connection deletes them)."""
        if self.kind in (Kind.E_NEG, Kind.COV):
            return (self.a, self.b)
        return ()

    def dagger(self) -> "Generator":
        if self.kind == Kind.RENAME:
            return replace(self, u=self.v, v=self.u)
        if self.is_rule:
            return replace(self, bar=not self.bar)
        return self

    def renamed(self, mapping: Mapping[str, str]) -> "Generator":
        values = {slot: mapping.get(getattr(self, slot), getattr(self, slot)) for slot in _SLOTS[self.kind]}
        return replace(self, **values)

    def __str__(self) -> str:
        prefix = "~" if self.bar else ""
        if self.kind == Kind.ID:
            return "id"
        if self.kind == Kind.TOUCH:
            return f"S({self.u})"
        if self.kind == Kind.RENAME:
            return f"R({self.u}>{self.v})"
        if self.kind == Kind.E_NEG:
            return f"{prefix}E({self.u}|{self.a},{self.b})"
        if self.kind == Kind.E_POS:
            return f"{prefix}E({self.u},{self.v})"
        if self.kind == Kind.ION:
            return f"{prefix}I({self.u},{self.v})"
        return f"{prefix}C({self.u},{self.v}|{self.a},{self.b})"


def identity_generator() -> Generator:
    return Generator(Kind.ID)


def touch(u: str) -> Generator:
    return Generator(Kind.TOUCH, u=u)


def rename(u: str, v: str) -> Generator:
    return Generator(Kind.RENAME, u=u, v=v)


def e_neg(u: str, a: str, b: str, bar: bool = False) -> Generator:
    return Generator(Kind.E_NEG, u=u, a=a, b=b, bar=bar)


def e_pos(u: str, v: str, bar: bool = False) -> Generator:
    return Generator(Kind.E_POS, u=u, v=v, bar=bar)


def ion(u: str, v: str, bar: bool = False) -> Generator:
    return Generator(Kind.ION, u=u, v=v, bar=bar)


def cov(u: str, v: str, a: str, b: str, bar: bool = False) -> Generator:
    return Generator(Kind.COV, u=u, v=v, a=a, b=b, bar=bar)


@dataclass(frozen=True)
class Term:
    """A sequence of generators, optionally carrying the typing it was checked against."""
    generators: Tuple[Generator, ...] = ()
    dom: Optional[ChemGraph] = field(default=None, compare=False)
    cod: Optional[ChemGraph] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))

    @classmethod
    def of(cls, *generators: Generator) -> "Term":
        return cls(tuple(generators))

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self) -> Iterator[Generator]:
        return iter(self.generators)

    def __hash__(self):
        return hash(self.generators)

    @property
    def is_typed(self) -> bool:
        return self.dom is not None and self.cod is not None

    def then(self, other: "Term") -> "Term":
        dom = self.dom if self.is_typed and other.is_typed and self.cod == other.dom else None
        cod = other.cod if dom is not None else None
        return Term(self.generators + other.generators, dom, cod)

    def without_identities(self) -> "Term":
        return Term(tuple(g for g in self.generators if g.kind != Kind.ID), self.dom, self.cod)

    def renamed(self, mapping: Mapping[str, str]) -> "Term":
        return Term(tuple(g.renamed(mapping) for g in self.generators))

    def names(self) -> frozenset:
        found = set()
        for g in self.generators:
            found.update(g.names())
        return frozenset(found)

    def __str__(self) -> str:
        parts = [str(g) for g in self.generators if g.kind != Kind.ID]
        return ";".join(parts) if parts else "id"


@dataclass(frozen=True)
class Undefined:
    """A graph outside the domain of a generator, with the first domain clause it violates."""
    clause: str
    detail: str

    def __str__(self) -> str:
        return f"{self.clause}: {self.detail}"


Outcome = Union[ChemGraph, Undefined]


def _names_present(g: ChemGraph, names: Iterable[str]) -> Optional[Undefined]:
    missing = [n for n in names if n not in g]
    if missing:
        return Undefined("present", f"vertices {missing} not in graph")
    return None


def _names_fresh(g: ChemGraph, names: Iterable[str]) -> Optional[Undefined]:
    clash = [n for n in names if n in g]
    if clash:
        return Undefined("fresh", f"vertices {clash} already in graph")
    return None


def _disconnect(gen: Generator, g: ChemGraph) -> Outcome:
    problem = _names_present(g, gen.changed) or _names_fresh(g, gen.added)
    if problem:
        return problem
    u = gen.u
    if gen.kind == Kind.E_NEG:
        if not g.is_chemical(u):
            return Undefined("u-chemical", f"{u} is a binding site")
        if g.charge(u) >= 0:
            return Undefined("u-negative", f"{u} has charge {g.charge(u)}")
        out = g.with_charge(u, g.charge(u) + 1)
        out = out.with_vertex(gen.a, ALPHA, 0).with_vertex(gen.b, ALPHA, -1)
        return out.with_bond(u, gen.a, 1)

    v = gen.v
    if gen.kind == Kind.E_POS:
        if not g.is_chemical(u):
            return Undefined("u-chemical", f"{u} is a binding site")
        if g.charge(u) < 0:
            return Undefined("u-not-negative", f"{u} has charge {g.charge(u)}")
        if not g.is_alpha(v):
            return Undefined("v-alpha", f"{v} is not a binding site")
        if g.bond(u, v) != 1:
            return Undefined("single-bond", f"bond {u}-{v} is {g.bond(u, v)}")
        return g.with_charge(u, g.charge(u) + 1).with_charge(v, -1).with_bond(u, v, 0)

    if gen.kind == Kind.ION:
        if g.bond(u, v) != IONIC:
            return Undefined("ionic-bond", f"bond {u}-{v} is {g.bond(u, v)}")
        if g.charge(u) <= 0:
            return Undefined("u-positive", f"{u} has charge {g.charge(u)}")
        if g.charge(v) >= 0:
            return Undefined("v-negative", f"{v} has charge {g.charge(v)}")
        return g.with_bond(u, v, 0)

    if not g.is_chemical(u) or not g.is_chemical(v):
        return Undefined("chemical-ends", f"{u} and {v} must both be chemical")
    bond = g.bond(u, v)
    if bond in (0, IONIC):
        return Undefined("covalent-bond", f"bond {u}-{v} is {bond}")
    out = g.with_bond(u, v, bond - 1)
    out = out.with_vertex(gen.a, ALPHA, 0).with_vertex(gen.b, ALPHA, 0)
    return out.with_bond(u, gen.a, 1).with_bond(v, gen.b, 1)


def _connect(gen: Generator, g: ChemGraph) -> Outcome:
    """Preimage under the disconnection `gen`, if `g` lies in its image."""
    problem = _names_present(g, gen.changed + gen.added)
    if problem:
        return problem
    u = gen.u
    if gen.kind == Kind.E_NEG:
        a, b = gen.a, gen.b
        if not g.is_chemical(u):
            return Undefined("u-chemical", f"{u} is a binding site")
        if g.charge(u) > 0:
            return Undefined("u-not-positive", f"{u} has charge {g.charge(u)}")
        if not g.is_alpha(a) or g.charge(a) != 0 or g.bond(u, a) != 1:
            return Undefined("a-neutral-site", f"{a} is not a neutral binding site on {u}")
        if not g.is_alpha(b) or g.charge(b) != -1 or g.neighbours(b):
            return Undefined("b-free-electron", f"{b} is not an isolated negative binding site")
        pre = g.without_vertex(a).without_vertex(b)
        return pre.with_charge(u, g.charge(u) - 1)

    v = gen.v
    if gen.kind == Kind.E_POS:
        if not g.is_chemical(u):
            return Undefined("u-chemical", f"{u} is a binding site")
        if g.charge(u) < 1:
            return Undefined("u-positive", f"{u} has charge {g.charge(u)}")
        if not g.is_alpha(v) or g.charge(v) != -1 or g.neighbours(v):
            return Undefined("v-free-electron", f"{v} is not an isolated negative binding site")
        return g.with_charge(u, g.charge(u) - 1).with_charge(v, 0).with_bond(u, v, 1)

    if gen.kind == Kind.ION:
        if g.bond(u, v) != 0:
            return Undefined("no-bond", f"bond {u}-{v} is {g.bond(u, v)}")
        if g.charge(u) <= 0:
            return Undefined("u-positive", f"{u} has charge {g.charge(u)}")
        if g.charge(v) >= 0:
            return Undefined("v-negative", f"{v} has charge {g.charge(v)}")
        return g.with_bond(u, v, IONIC)

    a, b = gen.a, gen.b
    if not g.is_chemical(u) or not g.is_chemical(v):
        return Undefined("chemical-ends", f"{u} and {v} must both be chemical")
    bond = g.bond(u, v)
    if bond == IONIC or bond >= 4:
        return Undefined("covalent-room", f"bond {u}-{v} is {bond}")
    for site, anchor in ((a, u), (b, v)):
        if not g.is_alpha(site) or g.charge(site) != 0 or g.bond(anchor, site) != 1:
            return Undefined("neutral-sites", f"{site} is not a neutral binding site on {anchor}")
    pre = g.without_vertex(a).without_vertex(b)
    return pre.with_bond(u, v, bond + 1)


def apply_generator(gen: Generator, g: ChemGraph, valences: Optional[ValenceTable] = None) -> Outcome:
    """Apply one generator to a chemical graph; results outside the domain come back as Undefined."""
    if gen.kind == Kind.ID:
        return g
    if gen.kind == Kind.TOUCH:
        return _names_present(g, (gen.u,)) or g
    if gen.kind == Kind.RENAME:
        problem = _names_present(g, (gen.u,))
        if problem:
            return problem
        if not g.is_alpha(gen.u):
            return Undefined("u-alpha", f"{gen.u} is not a binding site")
        if gen.v != gen.u and gen.v in g:
            return Undefined("fresh", f"{gen.v} already in graph")
        return g.rename(gen.u, gen.v)

    out = _connect(gen, g) if gen.bar else _disconnect(gen, g)
    if isinstance(out, Undefined):
        return out
    validator = ChemGraphValidator(valences)
    problems = validator.chemical_violations(out)
    if problems:
        return Undefined("result-chemical", str(problems[0]))
    if gen.bar and _disconnect(gen, out) != g:
        return Undefined("image", f"graph is not in the image of {gen.dagger()}")
    return out


def trace_term(t: Term, g: ChemGraph, valences: Optional[ValenceTable] = None) -> List[ChemGraph]:
    """The graphs visited while evaluating `t` on `g`, starting with `g` itself."""
    validator = ChemGraphValidator(valences)
    problems = validator.chemical_violations(g)
    if problems:
        raise PreconditionError(f"term domain is not chemical: {problems[0]}")
    visited = [g]
    for index, gen in enumerate(t.generators, start=1):
        out = apply_generator(gen, visited[-1], valences)
        if isinstance(out, Undefined):
            raise TermTypeError(index, out.clause, f"{gen} {out.detail}")
        visited.append(out)
    return visited


def eval_term(t: Term, g: ChemGraph, valences: Optional[ValenceTable] = None) -> ChemGraph:
    return trace_term(t, g, valences)[-1]


def type_term(t: Term, g: ChemGraph, valences: Optional[ValenceTable] = None) -> Term:
    """Return `t` with its typing dom -> cod attached."""
    cod = eval_term(t, g, valences)
    return Term(t.generators, g, cod)


def is_well_typed(t: Term, g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    try:
        eval_term(t, g, valences)
    except TermTypeError:
        return False
    return True


def dagger_term(t: Term) -> Term:
    generators = tuple(gen.dagger() for gen in reversed(t.generators))
    if t.is_typed:
        return Term(generators, t.cod, t.dom)
    return Term(generators)
