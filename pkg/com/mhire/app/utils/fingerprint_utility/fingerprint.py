import logging
from collections import defaultdict
from typing import Dict, Set

import networkx as nx

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.common.errors import ParseError
from com.mhire.app.utils.format_utility.graph_format import read_text

logger = logging.getLogger(__name__)

WL_ITERATIONS = 3
EMPTY_FINGERPRINT = "empty"


def fingerprint(g: ChemGraph) -> str:
    """Weisfeiler-Lehman hash over atom, charge and bond labels; equal for isomorphic graphs."""
    if not len(g):
        return EMPTY_FINGERPRINT
    graph = g.to_networkx()
    for v, data in graph.nodes(data=True):
        data["label"] = f"{data['atom']}{data['charge']:+d}"
    return nx.weisfeiler_lehman_graph_hash(
        graph, node_attr="label", edge_attr="bond", iterations=WL_ITERATIONS)


class LookupOracle:
    """Template-free reaction lookup: reactant fingerprint -> set of product fingerprints."""

    def __init__(self, table: Dict[str, Set[str]] = None):
        self.table: Dict[str, Set[str]] = {k: set(v) for k, v in (table or {}).items()}

    def __call__(self, reactants: ChemGraph) -> Set[str]:
        return self.table.get(fingerprint(reactants), set())

    def __len__(self) -> int:
        return len(self.table)

    def predicts(self, reactants: ChemGraph, products: ChemGraph) -> bool:
        return fingerprint(products) in self(reactants)

    @classmethod
    def from_text(cls, text: str) -> "LookupOracle":
        table: Dict[str, Set[str]] = defaultdict(set)
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split("->")]
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError("expected `<reactant fingerprint> -> <product fingerprint>`", line=number)
            table[parts[0]].add(parts[1])
        return cls(table)

    @classmethod
    def from_file(cls, path) -> "LookupOracle":
        oracle = cls.from_text(read_text(path))
        logger.info(f"Loaded lookup oracle with {len(oracle)} entries from {path}")
        return oracle
