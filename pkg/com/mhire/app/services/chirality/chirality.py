import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from networkx.algorithms.isomorphism import GraphMatcher, categorical_edge_match, categorical_node_match

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.common.violation_schema import Violation

logger = logging.getLogger(__name__)

Triple = Tuple[str, str, str]
Quad = Tuple[str, str, str, str]


def _parity(perm: Sequence[int]) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(perm)), 2) if perm[i] > perm[j])
    return inversions % 2


EVEN_PERMUTATIONS = tuple(p for p in itertools.permutations(range(4)) if _parity(p) == 0)


def canonical_triangle(triple: Iterable[str]) -> Triple:
    return tuple(sorted(triple))


def canonical_tetrahedron(quad: Sequence[str]) -> Quad:
    """Least representative of the orbit of `quad` under even permutations."""
    return min(tuple(quad[i] for i in p) for p in EVEN_PERMUTATIONS)


def reflected(quad: Sequence[str]) -> Quad:
    """ABCD -> DABC, an odd permutation."""
    return (quad[3], quad[0], quad[1], quad[2])


@dataclass(frozen=True)
class OrientedGraph:
    """A chemically labelled graph with triangle and tetrahedron relations stored as orbit representatives."""
    base: ChemGraph
    tri: FrozenSet[Triple] = frozenset()
    tet: FrozenSet[Quad] = frozenset()
    name: str = field(default="", compare=False)

    @classmethod
    def of(cls, base: ChemGraph, triangles: Iterable[Sequence[str]] = (),
           tetrahedra: Iterable[Sequence[str]] = (), name: str = "") -> "OrientedGraph":
        return cls(
            base,
            frozenset(canonical_triangle(t) for t in triangles),
            frozenset(canonical_tetrahedron(tuple(q)) for q in tetrahedra),
            name=name or base.name,
        )

    def has_triangle(self, a: str, b: str, c: str) -> bool:
        return canonical_triangle((a, b, c)) in self.tri

    def has_tetrahedron(self, a: str, b: str, c: str, d: str) -> bool:
        return canonical_tetrahedron((a, b, c, d)) in self.tet


def validate_orientation(og: OrientedGraph) -> List[Violation]:
    violations: List[Violation] = []
    known = og.base.vertices
    for t in sorted(og.tri):
        unknown = sorted(set(t) - known)
        if unknown:
            violations.append(Violation(
                clause="tri-vertex", vertices=unknown, message="triangle names unknown vertices"))
        if len(set(t)) != 3:
            violations.append(Violation(
                clause="tri-repeat", vertices=list(t), message="triangle repeats a vertex"))
    for q in sorted(og.tet):
        unknown = sorted(set(q) - known)
        if unknown:
            violations.append(Violation(
                clause="tet-vertex", vertices=unknown, message="tetrahedron names unknown vertices"))
        if len(set(q)) != 4:
            violations.append(Violation(
                clause="tet-repeat", vertices=list(q), message="tetrahedron repeats a vertex"))
            continue
        for face in itertools.combinations(q, 3):
            if canonical_triangle(face) not in og.tri:
                violations.append(Violation(
                    clause="tet-face", vertices=list(face),
                    message=f"face of tetrahedron {' '.join(q)} is not a triangle"))
    return violations


def _matcher(host: ChemGraph, pattern: ChemGraph, charges: bool = True) -> GraphMatcher:
    if charges:
        node_match = categorical_node_match(["atom", "charge"], [None, 0])
    else:
        node_match = categorical_node_match("atom", None)
    return GraphMatcher(
        host.to_networkx(), pattern.to_networkx(),
        node_match=node_match, edge_match=categorical_edge_match("bond", None))


def label_isomorphisms(M: ChemGraph, N: ChemGraph) -> Iterator[Dict[str, str]]:
    """Every bijection M -> N preserving atom labels, charges and bond labels both ways."""
    if len(M) != len(N) or len(M.bonds) != len(N.bonds):
        return
    yield from _matcher(M, N).isomorphisms_iter()


def label_embeddings(pattern: ChemGraph, host: ChemGraph, charges: bool = True) -> Iterator[Dict[str, str]]:
    """Injections pattern -> host onto induced subgraphs with the same labels."""
    for found in _matcher(host, pattern, charges).subgraph_isomorphisms_iter():
        yield {p: h for h, p in found.items()}


def _carries(f: Dict[str, str], M: OrientedGraph, N: OrientedGraph, reflect: bool) -> bool:
    triangles = {canonical_triangle(f[v] for v in t) for t in M.tri}
    if triangles != N.tri:
        return False
    mapped = (tuple(f[v] for v in q) for q in M.tet)
    if reflect:
        mapped = (reflected(q) for q in mapped)
    return {canonical_tetrahedron(q) for q in mapped} == N.tet


def preserves_orientation(f: Dict[str, str], M: OrientedGraph, N: OrientedGraph) -> bool:
    return _carries(f, M, N, reflect=False)


def reflects_orientation(f: Dict[str, str], M: OrientedGraph, N: OrientedGraph) -> bool:
    return _carries(f, M, N, reflect=True)


def _witness(M: OrientedGraph, N: OrientedGraph, reflect: bool) -> Optional[Dict[str, str]]:
    for f in label_isomorphisms(M.base, N.base):
        if _carries(f, M, N, reflect):
            return f
    return None


def orientation_preserving_exists(M: OrientedGraph, N: OrientedGraph) -> bool:
    return _witness(M, N, reflect=False) is not None


def orientation_reflecting_exists(M: OrientedGraph, N: OrientedGraph) -> bool:
    return _witness(M, N, reflect=True) is not None


def are_chiral(M: OrientedGraph, N: OrientedGraph) -> bool:
    return orientation_reflecting_exists(M, N) and not orientation_preserving_exists(M, N)


@dataclass(frozen=True)
class Verdict:
    preserving: Optional[Dict[str, str]]
    reflecting: Optional[Dict[str, str]]

    @property
    def chiral(self) -> bool:
        return self.reflecting is not None and self.preserving is None

    def __str__(self) -> str:
        flags = [
            f"PRESERVING={'yes' if self.preserving is not None else 'no'}",
            f"REFLECTING={'yes' if self.reflecting is not None else 'no'}",
            f"CHIRAL={'yes' if self.chiral else 'no'}",
        ]
        return " ".join(flags)


def verdict_triple(M: OrientedGraph, N: OrientedGraph) -> Verdict:
    """Witnesses for both kinds of isomorphism, from which chirality follows."""
    verdict = Verdict(_witness(M, N, reflect=False), _witness(M, N, reflect=True))
    logger.info(f"Chirality of {M.name or 'M'} and {N.name or 'N'}: {verdict}")
    return verdict
