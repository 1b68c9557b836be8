import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Set, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC, cov, freshen, sign
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import is_valence_complete, validate_prechemical
from com.mhire.app.chemistry.chem_graph.valence_table import ALPHA
from com.mhire.app.common.errors import DomainError, PreconditionError
from com.mhire.app.common.violation_schema import Violation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphMorphism:
    """A vertex function between two chemically labelled graphs."""
    dom: ChemGraph
    cod: ChemGraph
    mapping: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        mapping = dict(self.mapping)
        missing = self.dom.vertices - mapping.keys()
        if missing:
            raise DomainError(f"morphism undefined on {sorted(missing)}")
        extra = mapping.keys() - self.dom.vertices
        if extra:
            raise DomainError(f"morphism maps unknown vertices {sorted(extra)}")
        outside = {v for v in mapping.values() if v not in self.cod}
        if outside:
            raise DomainError(f"morphism image {sorted(outside)} not in codomain")
        object.__setattr__(self, "mapping", mapping)

    def __hash__(self):
        return hash((self.dom, self.cod, tuple(sorted(self.mapping.items()))))

    def __call__(self, v: str) -> str:
        return self.mapping[v]

    def image(self, subset: Iterable[str] = None) -> FrozenSet[str]:
        source = self.dom.vertices if subset is None else subset
        return frozenset(self.mapping[v] for v in source)

    def preimage(self, w: str) -> FrozenSet[str]:
        return frozenset(v for v, image in self.mapping.items() if image == w)

    def fibres(self) -> Dict[str, Set[str]]:
        result: Dict[str, Set[str]] = defaultdict(set)
        for v, w in self.mapping.items():
            result[w].add(v)
        return result

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)

    def inverse(self) -> Dict[str, str]:
        """Inverse vertex function of an injective morphism."""
        if not self.is_injective():
            raise PreconditionError("morphism is not injective")
        return {w: v for v, w in self.mapping.items()}


def identity_morphism(g: ChemGraph) -> GraphMorphism:
    return GraphMorphism(g, g, {v: v for v in g.vertices})


def compose_morphisms(f: GraphMorphism, g: GraphMorphism) -> GraphMorphism:
    """Diagrammatic composite: first f, then g."""
    if f.cod != g.dom:
        raise PreconditionError("morphisms are not composable")
    return GraphMorphism(f.dom, g.cod, {v: g.mapping[w] for v, w in f.mapping.items()})


def _require_prechemical(f: GraphMorphism):
    if validate_prechemical(f.dom):
        raise PreconditionError("morphism domain is not pre-chemical")
    if validate_prechemical(f.cod):
        raise PreconditionError("morphism codomain is not pre-chemical")


def _alpha_fibre_sum(f: GraphMorphism, fibre: Iterable[str], b: str) -> int:
    return sum(cov(f.dom.bond(a, b)) for a in fibre)


def check_morphism(f: GraphMorphism) -> List[Violation]:
    """Violations of the morphism conditions; empty iff f is a morphism of pre-chemical graphs."""
    _require_prechemical(f)
    A, B = f.dom, f.cod
    violations: List[Violation] = []
    chem = sorted(A.chemical_vertices())
    alphas = sorted(A.alpha_vertices())

    chem_images: Dict[str, str] = {}
    for v in chem:
        w = f(v)
        if w in chem_images:
            violations.append(Violation(
                clause="chem-injective", vertices=[chem_images[w], v],
                message=f"both map to {w}"))
        chem_images.setdefault(w, v)
    overlap = f.image(chem) & f.image(alphas)
    if overlap:
        violations.append(Violation(
            clause="chem-alpha-disjoint", vertices=sorted(overlap),
            message="chemical and binding-site images meet"))

    for v in chem:
        if B.atom(f(v)) != A.atom(v):
            violations.append(Violation(
                clause="atom", vertices=[v], message=f"{A.atom(v)} mapped to {B.atom(f(v))}"))
    for v in sorted(A.vertices):
        if A.charge(v) != 0 and sign(B.charge(f(v))) != sign(A.charge(v)):
            violations.append(Violation(
                clause="charge-sign", vertices=[v],
                message=f"charge {A.charge(v)} mapped to {B.charge(f(v))}"))

    fibres = f.fibres()
    for w in sorted(fibres):
        net = A.net_charge(fibres[w])
        if net != 0 and net != B.charge(w):
            violations.append(Violation(
                clause="fibre-charge", vertices=[w],
                message=f"fibre net charge {net} differs from {B.charge(w)}"))

    for (u, v), label in sorted(A.bonds.items()):
        if label == IONIC and B.bond(f(u), f(v)) != IONIC:
            violations.append(Violation(
                clause="ionic", vertices=[u, v], message="ionic bond not preserved"))
        if label != 0 and A.is_chemical(u) and A.is_chemical(v) and B.bond(f(u), f(v)) != label:
            violations.append(Violation(
                clause="chem-bond", vertices=[u, v],
                message=f"bond {label} mapped to {B.bond(f(u), f(v))}"))

    violations.extend(_alpha_fibre_violations(f, strict=False))
    return violations


def _alpha_fibre_violations(f: GraphMorphism, strict: bool) -> List[Violation]:
    A, B = f.dom, f.cod
    violations: List[Violation] = []
    fibres = f.fibres()
    for w in sorted(f.image(A.alpha_vertices())):
        fibre = fibres[w]
        for b in sorted(A.chemical_vertices()):
            k = _alpha_fibre_sum(f, fibre, b)
            if (k != 0 or strict) and k != cov(B.bond(w, f(b))):
                violations.append(Violation(
                    clause="alpha-fibre-bond", vertices=[w, f(b)],
                    message=f"fibre multiplicity {k} differs from {cov(B.bond(w, f(b)))}"))
    return violations


def is_morphism(f: GraphMorphism) -> bool:
    return not check_morphism(f)


def check_embedding(f: GraphMorphism) -> bool:
    """Injective, bijective on chemical vertices and preserving every atom label."""
    if check_morphism(f):
        raise PreconditionError("not a morphism of pre-chemical graphs")
    if not f.is_injective():
        return False
    if f.image(f.dom.chemical_vertices()) != f.cod.chemical_vertices():
        return False
    return all(f.cod.atom(f(v)) == f.dom.atom(v) for v in f.dom.vertices)


def matching_violations(f: GraphMorphism) -> List[Violation]:
    """The strict clauses a morphism must additionally meet to be a matching."""
    A, B = f.dom, f.cod
    violations: List[Violation] = []
    fibres = f.fibres()
    for w in sorted(fibres):
        net = A.net_charge(fibres[w])
        if net != B.charge(w):
            violations.append(Violation(
                clause="strict-fibre-charge", vertices=[w],
                message=f"fibre net charge {net} differs from {B.charge(w)}"))
    chem = sorted(A.chemical_vertices())
    for i, u in enumerate(chem):
        for v in chem[i + 1:]:
            if B.bond(f(u), f(v)) != A.bond(u, v):
                violations.append(Violation(
                    clause="strict-chem-bond", vertices=[u, v],
                    message=f"bond {A.bond(u, v)} mapped to {B.bond(f(u), f(v))}"))
    violations.extend(_alpha_fibre_violations(f, strict=True))
    if not is_ion_closed(B, f.image()):
        violations.append(Violation(
            clause="ion-closed", vertices=sorted(f.image()), message="image is not ion-closed"))
    return violations


def check_matching(f: GraphMorphism) -> bool:
    if check_morphism(f):
        raise PreconditionError("not a morphism of pre-chemical graphs")
    return not matching_violations(f)


def is_ion_closed(g: ChemGraph, subset: Iterable[str]) -> bool:
    subset = g.require_subset(subset)
    return all(g.ionic_neighbours(u) <= subset for u in subset)


def interior_chemical(g: ChemGraph, subset: FrozenSet[str]) -> FrozenSet[str]:
    return frozenset(s for s in g.chemical_vertices(subset) if g.neighbours(s) <= subset)


def is_matchable(g: ChemGraph, subset: Iterable[str]) -> bool:
    if not is_valence_complete(g):
        raise PreconditionError("matchability needs a valence-complete graph")
    subset = g.require_subset(subset)
    if not is_ion_closed(g, subset):
        return False
    interior = interior_chemical(g, subset)
    for u in subset:
        if u in interior or g.charge(u) != 0:
            continue
        if not g.neighbours(u) & interior:
            return False
    return True




def _completion_with_origins(
    g: ChemGraph, subset: FrozenSet[str], alpha_names: Mapping[Tuple[str, str, int], str]
) -> Tuple[ChemGraph, Dict[str, str]]:
    completion = g.restrict(subset)
    origins: Dict[str, str] = {}
    taken: Set[str] = set(subset)
    for u in sorted(subset):
        for v in sorted(g.neighbours(u) - subset):
            label = g.bond(u, v)
            if label == IONIC:
                for j in range(1, abs(g.charge(v)) + 1):
                    name = freshen(alpha_names.get((v, u, -j), f"{v}__{u}__ib__{j}"), taken)
                    taken.add(name)
                    origins[name] = v
                    completion = completion.with_vertex(name, ALPHA, sign(g.charge(v)))
                    completion = completion.with_bond(u, name, IONIC)
            else:
                for j in range(1, cov(label) + 1):
                    name = freshen(alpha_names.get((v, u, j), f"{v}__{u}__{j}"), taken)
                    taken.add(name)
                    origins[name] = v
                    completion = completion.with_vertex(name, ALPHA, 0)
                    completion = completion.with_bond(u, name, 1)
    return completion, origins


def valence_completion(
    g: ChemGraph, subset: Iterable[str], alpha_names: Mapping[Tuple[str, str, int], str] = None
) -> ChemGraph:
    """The subset padded with one binding site per exterior covalent slot and per exterior unit charge
    across an ionic bond.

    Binding sites are named `<nbr>__<anchor>__<j>` (covalent) and `<nbr>__<anchor>__ib__<j>` (ionic)
    unless `alpha_names` supplies a name for the key (nbr, anchor, j), or (nbr, anchor, -j) for ionic sites.
    """
    if not is_valence_complete(g):
        raise PreconditionError("valence completion needs a valence-complete graph")
    subset = g.require_subset(subset)
    if g.alpha_vertices(subset):
        raise PreconditionError("valence completion is defined on chemical vertices only")
    completion, _ = _completion_with_origins(g, subset, alpha_names or {})
    return completion


def _decomposition_with_origins(
    g: ChemGraph, subset: FrozenSet[str], taken: Set[str]
) -> Tuple[ChemGraph, Dict[str, str]]:
    if any(g.charge(b) == 0 for b in subset):
        raise PreconditionError("charge decomposition needs charged vertices")
    atoms: Dict[str, str] = {}
    charges: Dict[str, int] = {}
    origins: Dict[str, str] = {}
    for b in sorted(subset):
        for j in range(1, abs(g.charge(b)) + 1):
            name = freshen(f"{b}__crg__{j}", taken)
            taken.add(name)
            atoms[name] = ALPHA
            charges[name] = sign(g.charge(b))
            origins[name] = b
    return ChemGraph(atoms, charges, {}), origins


def charge_decomposition(g: ChemGraph, subset: Iterable[str]) -> ChemGraph:
    """Discrete graph of |charge(b)| unit-charged binding sites `<b>__crg__<j>` for each b."""
    subset = g.require_subset(subset)
    decomposition, _ = _decomposition_with_origins(g, subset, set())
    return decomposition


def matching_from_matchable(g: ChemGraph, subset: Iterable[str]) -> Tuple[ChemGraph, GraphMorphism]:
    """A matching with valence-complete domain whose image is exactly `subset`.

    Binding sites of the subset keep their own names in the domain.
    """
    subset = g.require_subset(subset)
    if not is_matchable(g, subset):
        raise PreconditionError(f"subset {sorted(subset)} is not matchable")
    interior = interior_chemical(g, subset)
    ionic_of_interior: Set[str] = set()
    for u in interior:
        ionic_of_interior |= g.ionic_neighbours(u)
    charged = g.charged_vertices(subset - interior - ionic_of_interior)

    alpha_names: Dict[Tuple[str, str, int], str] = {}
    for u in interior:
        for v in g.alpha_vertices(g.neighbours(u)):
            alpha_names[(v, u, -1 if g.bond(u, v) == IONIC else 1)] = v
    completion, origins = _completion_with_origins(g, interior, alpha_names)

    charged_alphas = g.alpha_vertices(charged)
    taken = set(completion.vertices) | set(charged_alphas)
    decomposition, crg_origins = _decomposition_with_origins(g, charged - charged_alphas, taken)
    for a in sorted(charged_alphas):
        decomposition = decomposition.with_vertex(a, ALPHA, g.charge(a))
        crg_origins[a] = a
    domain = completion.disjoint_union(decomposition)

    mapping = {u: u for u in interior}
    mapping.update(origins)
    mapping.update(crg_origins)
    matching = GraphMorphism(domain, g, mapping)
    if matching.image() != subset:
        raise PreconditionError(f"matching image differs from {sorted(subset)}")
    logger.debug(f"Matching for {sorted(subset)} has domain of {len(domain)} vertices")
    return domain, matching
