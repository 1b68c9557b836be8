import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import ChemGraphValidator
from com.mhire.app.chemistry.chem_graph.valence_table import ValenceTable
from com.mhire.app.common.errors import PreconditionError
from com.mhire.app.common.violation_schema import Violation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Reaction:
    """A morphism dom -> cod: changed subsets, a bijection on their chemical vertices
    and an isomorphism of the unchanged parts."""
    dom: ChemGraph
    cod: ChemGraph
    changed_dom: FrozenSet[str] = frozenset()
    changed_cod: FrozenSet[str] = frozenset()
    chem_map: Mapping[str, str] = field(default_factory=dict)
    rest_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "changed_dom", frozenset(self.changed_dom))
        object.__setattr__(self, "changed_cod", frozenset(self.changed_cod))
        object.__setattr__(self, "chem_map", dict(self.chem_map))
        object.__setattr__(self, "rest_map", dict(self.rest_map))

    def __hash__(self):
        return hash((
            self.dom, self.cod, self.changed_dom, self.changed_cod,
            tuple(sorted(self.chem_map.items())), tuple(sorted(self.rest_map.items())),
        ))

    def full_map(self) -> Dict[str, str]:
        """b + i, defined on the chemical changed vertices and the unchanged part."""
        return {**self.rest_map, **self.chem_map}


def validate_reaction(r: Reaction, valences: Optional[ValenceTable] = None) -> List[Violation]:
    violations: List[Violation] = []
    A, B = r.dom, r.cod
    U_A, U_B = r.changed_dom, r.changed_cod

    outside = sorted((U_A - A.vertices) | (U_B - B.vertices))
    if outside:
        violations.append(Violation(clause="subset", vertices=outside, message="changed vertices not in graph"))
        return violations

    if A.net_charge(U_A) != B.net_charge(U_B):
        violations.append(Violation(
            clause="net-charge", vertices=sorted(U_A),
            message=f"net charge {A.net_charge(U_A)} becomes {B.net_charge(U_B)}"))

    chem_A, chem_B = A.chemical_vertices(U_A), B.chemical_vertices(U_B)
    b = r.chem_map
    if set(b) != chem_A or set(b.values()) != chem_B or len(set(b.values())) != len(b):
        violations.append(Violation(
            clause="chem-bijection", vertices=sorted(chem_A ^ set(b)),
            message="changed-part map is not a bijection between chemical vertices"))
    for u, w in sorted(b.items()):
        if u in A and w in B and A.atom(u) != B.atom(w):
            violations.append(Violation(
                clause="atom-preserving", vertices=[u, w], message=f"{A.atom(u)} becomes {B.atom(w)}"))

    rest_A, rest_B = A.vertices - U_A, B.vertices - U_B
    i = r.rest_map
    if set(i) != rest_A or set(i.values()) != rest_B or len(set(i.values())) != len(i):
        violations.append(Violation(
            clause="complement-bijection", vertices=sorted(rest_A ^ set(i)),
            message="unchanged-part map is not a bijection"))
        return violations + _chemical_violations(r, valences)

    for a in sorted(rest_A):
        if A.atom(a) != B.atom(i[a]) or A.charge(a) != B.charge(i[a]):
            violations.append(Violation(
                clause="complement-iso", vertices=[a, i[a]], message="vertex labels differ"))
    ordered = sorted(rest_A)
    for n, a in enumerate(ordered):
        for c in ordered[n + 1:]:
            if A.bond(a, c) != B.bond(i[a], i[c]):
                violations.append(Violation(
                    clause="complement-iso", vertices=[a, c],
                    message=f"bond {A.bond(a, c)} becomes {B.bond(i[a], i[c])}"))

    if set(b) == chem_A:
        for u in sorted(chem_A):
            for a in ordered:
                if A.bond(u, a) != B.bond(b[u], i[a]):
                    violations.append(Violation(
                        clause="boundary", vertices=[u, a],
                        message=f"bond {A.bond(u, a)} becomes {B.bond(b[u], i[a])}"))
    return violations + _chemical_violations(r, valences)


def _chemical_violations(r: Reaction, valences: Optional[ValenceTable]) -> List[Violation]:
    validator = ChemGraphValidator(valences)
    violations: List[Violation] = []
    if validator.chemical_violations(r.dom):
        violations.append(Violation(clause="dom-chemical", vertices=[], message="domain is not chemical"))
    if validator.chemical_violations(r.cod):
        violations.append(Violation(clause="cod-chemical", vertices=[], message="codomain is not chemical"))
    return violations


def identity(g: ChemGraph) -> Reaction:
    return Reaction(g, g, frozenset(), frozenset(), {}, {v: v for v in g.vertices})


def touch(g: ChemGraph, subset: Iterable[str]) -> Reaction:
    """The reaction marking `subset` as changed while leaving every label in place."""
    subset = g.require_subset(subset)
    return Reaction(
        g, g, subset, subset,
        {v: v for v in g.chemical_vertices(subset)},
        {v: v for v in g.vertices - subset},
    )


def compose(r: Reaction, s: Reaction) -> Reaction:
    """Diagrammatic composite r;s."""
    if r.cod != s.dom:
        raise PreconditionError("reactions are not composable: codomain and domain differ")
    i_inverse = {w: a for a, w in r.rest_map.items()}
    changed_dom = r.changed_dom | {i_inverse[w] for w in s.changed_dom - r.changed_cod}
    changed_cod = s.changed_cod | {s.rest_map[w] for w in r.changed_cod - s.changed_dom}

    first = r.full_map()
    second = s.full_map()
    chem_map = {a: second[first[a]] for a in r.dom.chemical_vertices(changed_dom)}
    rest_map = {a: s.rest_map[w] for a, w in r.rest_map.items() if a not in changed_dom}
    return Reaction(r.dom, s.cod, changed_dom, changed_cod, chem_map, rest_map)


def parallel(r: Reaction, s: Reaction) -> Reaction:
    """Monoidal sum r + s over disjoint vertex names."""
    if (r.dom.vertices & s.dom.vertices) or (r.cod.vertices & s.cod.vertices):
        raise PreconditionError("reactions in a sum must have disjoint vertex names")
    return Reaction(
        r.dom.disjoint_union(s.dom), r.cod.disjoint_union(s.cod),
        r.changed_dom | s.changed_dom, r.changed_cod | s.changed_cod,
        {**r.chem_map, **s.chem_map}, {**r.rest_map, **s.rest_map},
    )


def dagger(r: Reaction) -> Reaction:
    return Reaction(
        r.cod, r.dom, r.changed_cod, r.changed_dom,
        {w: u for u, w in r.chem_map.items()},
        {w: a for a, w in r.rest_map.items()},
    )


def equal(r: Reaction, s: Reaction) -> bool:
    return r == s


def reaction_diff(r: Reaction, s: Reaction) -> List[str]:
    """Names of the components on which two reactions differ."""
    differences = []
    if r.dom != s.dom:
        differences.append("dom")
    if r.cod != s.cod:
        differences.append("cod")
    if r.changed_dom != s.changed_dom:
        differences.append(
            f"changed-dom: {sorted(r.changed_dom ^ s.changed_dom)}")
    if r.changed_cod != s.changed_cod:
        differences.append(
            f"changed-cod: {sorted(r.changed_cod ^ s.changed_cod)}")
    if r.chem_map != s.chem_map:
        keys = sorted(k for k in set(r.chem_map) | set(s.chem_map) if r.chem_map.get(k) != s.chem_map.get(k))
        differences.append(f"b: {keys}")
    if r.rest_map != s.rest_map:
        keys = sorted(k for k in set(r.rest_map) | set(s.rest_map) if r.rest_map.get(k) != s.rest_map.get(k))
        differences.append(f"i: {keys}")
    return differences
