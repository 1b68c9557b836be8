import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from com.mhire.app.chemistry.chem_graph.valence_table import ALPHA
from com.mhire.app.common.errors import DomainError

logger = logging.getLogger(__name__)

IONIC = "ionic"
BOND_LABELS = (0, 1, 2, 3, 4, IONIC)
NAME_PATTERN = re.compile(r"[A-Za-z0-9_.'\-]+")

BondLabel = Union[int, str]
Pair = Tuple[str, str]


def cov(label: BondLabel) -> int:
    return 0 if label == IONIC else int(label)


def ion(label: BondLabel) -> int:
    return 1 if label == IONIC else 0


def bond_key(u: str, v: str) -> Pair:
    return (u, v) if u < v else (v, u)


def freshen(name: str, taken: Iterable[str]) -> str:
    """Return `name` if free, else `name_k` for the least k making it free."""
    taken = taken if isinstance(taken, (set, frozenset, dict)) else set(taken)
    if name not in taken:
        return name
    k = 1
    while f"{name}_{k}" in taken:
        k += 1
    return f"{name}_{k}"


def sign(value: int) -> int:
    return (value > 0) - (value < 0)


@dataclass(frozen=True)
class ChemGraph:
    """A chemically labelled graph: named vertices with atom and charge labels, bond labels on pairs.

    Charges and bonds are stored sparsely; an absent entry means 0.
    """
    atoms: Mapping[str, str]
    charges: Mapping[str, int] = field(default_factory=dict)
    bonds: Mapping[Pair, BondLabel] = field(default_factory=dict)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        atoms = dict(self.atoms)
        charges: Dict[str, int] = {}
        for v, c in dict(self.charges).items():
            if v not in atoms:
                raise DomainError(f"charge given for unknown vertex {v}")
            if not isinstance(c, int) or isinstance(c, bool):
                raise DomainError(f"charge of {v} must be an integer")
            if c != 0:
                charges[v] = c
        bonds: Dict[Pair, BondLabel] = {}
        for (u, v), label in dict(self.bonds).items():
            if u == v:
                raise DomainError(f"self-bond on {u}")
            if u not in atoms or v not in atoms:
                raise DomainError(f"bond {u}-{v} mentions an unknown vertex")
            if label not in BOND_LABELS:
                raise DomainError(f"bad bond label {label!r} on {u}-{v}")
            key = bond_key(u, v)
            if key in bonds and bonds[key] != label:
                raise DomainError(f"conflicting labels for bond {u}-{v}")
            if label != 0:
                bonds[key] = label
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "charges", charges)
        object.__setattr__(self, "bonds", bonds)

    def key(self) -> Tuple:
        return (
            tuple(sorted(self.atoms.items())),
            tuple(sorted(self.charges.items())),
            tuple(sorted((k, str(label)) for k, label in self.bonds.items())),
        )

    def __hash__(self):
        return hash(self.key())

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, v: str) -> bool:
        return v in self.atoms

    @cached_property
    def _adjacency(self) -> Dict[str, Dict[str, BondLabel]]:
        adjacency: Dict[str, Dict[str, BondLabel]] = {v: {} for v in self.atoms}
        for (u, v), label in self.bonds.items():
            adjacency[u][v] = label
            adjacency[v][u] = label
        return adjacency

    # Labels

    @property
    def vertices(self) -> FrozenSet[str]:
        return frozenset(self.atoms)

    def require(self, *names: str):
        for v in names:
            if v not in self.atoms:
                raise DomainError(f"vertex {v} not in graph {self.name or ''}".rstrip())

    def require_subset(self, subset: Iterable[str]) -> FrozenSet[str]:
        subset = frozenset(subset)
        missing = subset - self.vertices
        if missing:
            raise DomainError(f"vertices {sorted(missing)} not in graph")
        return subset

    def atom(self, v: str) -> str:
        self.require(v)
        return self.atoms[v]

    def charge(self, v: str) -> int:
        self.require(v)
        return self.charges.get(v, 0)

    def bond(self, u: str, v: str) -> BondLabel:
        if u == v:
            return 0
        return self.bonds.get(bond_key(u, v), 0)

    def is_alpha(self, v: str) -> bool:
        return self.atom(v) == ALPHA

    def is_chemical(self, v: str) -> bool:
        return self.atom(v) != ALPHA

    # Neighbours

    def neighbours(self, v: str) -> FrozenSet[str]:
        self.require(v)
        return frozenset(self._adjacency[v])

    def covalent_neighbours(self, v: str) -> FrozenSet[str]:
        self.require(v)
        return frozenset(u for u, label in self._adjacency[v].items() if cov(label) > 0)

    def ionic_neighbours(self, v: str) -> FrozenSet[str]:
        self.require(v)
        return frozenset(u for u, label in self._adjacency[v].items() if label == IONIC)

    def neighbours_of(self, subset: Iterable[str]) -> FrozenSet[str]:
        """Neighbours of a set of vertices lying outside it."""
        subset = self.require_subset(subset)
        found: Set[str] = set()
        for v in subset:
            found |= self._adjacency[v].keys()
        return frozenset(found - subset)

    def bond_sum(self, v: str) -> int:
        return sum(cov(label) for label in self._adjacency[v].values())

    # Derived vertex subsets

    def _within(self, subset: Optional[Iterable[str]]) -> Iterable[str]:
        return self.atoms if subset is None else self.require_subset(subset)

    def chemical_vertices(self, subset: Optional[Iterable[str]] = None) -> FrozenSet[str]:
        return frozenset(v for v in self._within(subset) if self.atoms[v] != ALPHA)

    def alpha_vertices(self, subset: Optional[Iterable[str]] = None) -> FrozenSet[str]:
        return frozenset(v for v in self._within(subset) if self.atoms[v] == ALPHA)

    def charged_vertices(self, subset: Optional[Iterable[str]] = None) -> FrozenSet[str]:
        return frozenset(v for v in self._within(subset) if self.charges.get(v, 0) != 0)

    def positive_vertices(self, subset: Optional[Iterable[str]] = None) -> FrozenSet[str]:
        return frozenset(v for v in self._within(subset) if self.charges.get(v, 0) > 0)

    def negative_vertices(self, subset: Optional[Iterable[str]] = None) -> FrozenSet[str]:
        return frozenset(v for v in self._within(subset) if self.charges.get(v, 0) < 0)

    def net_charge(self, subset: Optional[Iterable[str]] = None) -> int:
        return sum(self.charges.get(v, 0) for v in self._within(subset))

    # Surgery

    def rename(self, u: str, v: str) -> "ChemGraph":
        self.require(u)
        if u == v:
            return self
        if v in self.atoms:
            raise DomainError(f"cannot rename {u} to {v}: name already used")
        return self.relabel({u: v})

    def relabel(self, mapping: Mapping[str, str]) -> "ChemGraph":
        """Rename vertices simultaneously; vertices missing from `mapping` keep their names."""
        full = {v: mapping.get(v, v) for v in self.atoms}
        if len(set(full.values())) != len(full):
            raise DomainError("relabelling is not injective")
        return ChemGraph(
            atoms={full[v]: a for v, a in self.atoms.items()},
            charges={full[v]: c for v, c in self.charges.items()},
            bonds={bond_key(full[u], full[v]): label for (u, v), label in self.bonds.items()},
            name=self.name,
        )

    def restrict(self, subset: Iterable[str]) -> "ChemGraph":
        """Induced subgraph on `subset`."""
        subset = self.require_subset(subset)
        return ChemGraph(
            atoms={v: a for v, a in self.atoms.items() if v in subset},
            charges={v: c for v, c in self.charges.items() if v in subset},
            bonds={k: label for k, label in self.bonds.items() if k[0] in subset and k[1] in subset},
            name=self.name,
        )

    def disjoint_union(self, other: "ChemGraph") -> "ChemGraph":
        clash = self.vertices & other.vertices
        if clash:
            raise DomainError(f"disjoint union with shared names {sorted(clash)}")
        return ChemGraph(
            atoms={**self.atoms, **other.atoms},
            charges={**self.charges, **other.charges},
            bonds={**self.bonds, **other.bonds},
            name=f"{self.name}+{other.name}" if self.name and other.name else self.name or other.name,
        )

    def with_charge(self, v: str, charge: int) -> "ChemGraph":
        self.require(v)
        charges = dict(self.charges)
        charges[v] = charge
        return ChemGraph(self.atoms, charges, self.bonds, self.name)

    def with_bond(self, u: str, v: str, label: BondLabel) -> "ChemGraph":
        self.require(u, v)
        bonds = dict(self.bonds)
        key = bond_key(u, v)
        bonds.pop(key, None)
        if label != 0:
            bonds[key] = label
        return ChemGraph(self.atoms, self.charges, bonds, self.name)

    def with_vertex(self, v: str, atom: str, charge: int = 0) -> "ChemGraph":
        if v in self.atoms:
            raise DomainError(f"vertex {v} already present")
        atoms = dict(self.atoms)
        atoms[v] = atom
        charges = dict(self.charges)
        charges[v] = charge
        return ChemGraph(atoms, charges, self.bonds, self.name)

    def without_vertex(self, v: str) -> "ChemGraph":
        self.require(v)
        return self.restrict(self.vertices - {v})

    # Views

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for v, a in self.atoms.items():
            graph.add_node(v, atom=a, charge=self.charges.get(v, 0))
        for (u, v), label in self.bonds.items():
            graph.add_edge(u, v, bond=str(label))
        return graph

    def connected_components(self) -> List[FrozenSet[str]]:
        components = [frozenset(c) for c in nx.connected_components(self.to_networkx())]
        return sorted(components, key=lambda c: min(c))

    def describe(self) -> str:
        return f"{self.name or 'graph'}: {len(self.atoms)} vertices, {len(self.bonds)} bonds"
