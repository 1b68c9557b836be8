import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC, NAME_PATTERN, BondLabel, bond_key
from com.mhire.app.common.errors import DomainError, ParseError
from com.mhire.app.services.chirality.chirality import OrientedGraph

logger = logging.getLogger(__name__)

Line = Tuple[int, List[str]]


def tokenized_lines(text: str, first_line: int = 1) -> Iterator[Line]:
    """Non-blank lines split on whitespace, with `#` comments removed."""
    for number, raw in enumerate(text.splitlines(), start=first_line):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield number, tokens


def check_name(name: str, line: int) -> str:
    if not NAME_PATTERN.fullmatch(name):
        raise ParseError(f"bad vertex name {name!r}", line=line)
    return name


def parse_bond_label(token: str, line: int) -> BondLabel:
    if token == IONIC:
        return IONIC
    if token in ("1", "2", "3", "4"):
        return int(token)
    raise ParseError(f"bad bond label {token!r}", line=line)


def parse_charge(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"bad charge {token!r}", line=line)


@dataclass
class GraphBlock:
    """Accumulates `graph`/`atom`/`bond` lines and any orientation lines that follow them."""
    name: str = ""
    atoms: Dict[str, str] = field(default_factory=dict)
    charges: Dict[str, int] = field(default_factory=dict)
    bonds: Dict[Tuple[str, str], BondLabel] = field(default_factory=dict)
    triangles: List[Tuple[str, str, str]] = field(default_factory=list)
    tetrahedra: List[Tuple[str, str, str, str]] = field(default_factory=list)

    def accept(self, number: int, tokens: List[str]) -> bool:
        """Consume a line if it belongs to a graph; return False otherwise."""
        head, args = tokens[0], tokens[1:]
        if head == "graph":
            if len(args) != 1:
                raise ParseError("expected `graph <name>`", line=number)
            self.name = args[0]
        elif head == "atom":
            if len(args) not in (2, 3):
                raise ParseError("expected `atom <vertex> <element|alpha> [<charge>]`", line=number)
            v = check_name(args[0], number)
            if v in self.atoms:
                raise ParseError(f"duplicate atom {v}", line=number)
            self.atoms[v] = args[1]
            if len(args) == 3:
                self.charges[v] = parse_charge(args[2], number)
        elif head == "bond":
            if len(args) != 3:
                raise ParseError("expected `bond <u> <v> <1|2|3|4|ionic>`", line=number)
            u, v = check_name(args[0], number), check_name(args[1], number)
            if u == v:
                raise ParseError(f"self-bond on {u}", line=number)
            label = parse_bond_label(args[2], number)
            key = bond_key(u, v)
            if key in self.bonds and self.bonds[key] != label:
                raise ParseError(f"conflicting labels for bond {u}-{v}", line=number)
            self.bonds[key] = label
        elif head == "tri":
            if len(args) != 3:
                raise ParseError("expected `tri <a> <b> <c>`", line=number)
            self.triangles.append(tuple(check_name(a, number) for a in args))
        elif head == "tet":
            if len(args) != 4:
                raise ParseError("expected `tet <a> <b> <c> <d>`", line=number)
            self.tetrahedra.append(tuple(check_name(a, number) for a in args))
        else:
            return False
        return True

    def build(self, line: Optional[int] = None) -> ChemGraph:
        try:
            return ChemGraph(self.atoms, self.charges, self.bonds, name=self.name)
        except DomainError as e:
            raise ParseError(e.detail, line=line)


def parse_graph_lines(lines: Iterable[Line]) -> GraphBlock:
    block = GraphBlock()
    for number, tokens in lines:
        if not block.accept(number, tokens):
            raise ParseError(f"unknown directive {tokens[0]!r}", line=number)
    return block


def parse_graph(text: str) -> ChemGraph:
    block = parse_graph_lines(tokenized_lines(text))
    if block.triangles or block.tetrahedra:
        raise ParseError("orientation lines are not allowed in a plain graph")
    return block.build()


def parse_oriented_graph(text: str) -> OrientedGraph:
    """A graph with optional `tri`/`tet` orientation lines."""
    block = parse_graph_lines(tokenized_lines(text))
    return OrientedGraph.of(block.build(), block.triangles, block.tetrahedra, name=block.name)


def print_graph(g: ChemGraph) -> str:
    lines = [f"graph {g.name or 'g'}"]
    for v in sorted(g.vertices):
        charge = g.charge(v)
        lines.append(f"atom {v} {g.atom(v)} {charge}" if charge else f"atom {v} {g.atom(v)}")
    for (u, v), label in sorted(g.bonds.items()):
        lines.append(f"bond {u} {v} {label}")
    return "\n".join(lines) + "\n"


def print_oriented_graph(og: OrientedGraph) -> str:
    lines = [print_graph(og.base).rstrip("\n")]
    lines += [f"tri {' '.join(t)}" for t in sorted(og.tri)]
    lines += [f"tet {' '.join(q)}" for q in sorted(og.tet)]
    return "\n".join(lines) + "\n"


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}")


def load_graph(path) -> ChemGraph:
    g = parse_graph(read_text(path))
    if not g.name:
        g = ChemGraph(g.atoms, g.charges, g.bonds, name=Path(path).stem)
    logger.info(f"Loaded {g.describe()} from {path}")
    return g


def load_oriented_graph(path) -> OrientedGraph:
    og = parse_oriented_graph(read_text(path))
    if not og.name:
        og = OrientedGraph(og.base, og.tri, og.tet, name=Path(path).stem)
    logger.info(f"Loaded oriented {og.base.describe()} with {len(og.tet)} tetrahedra from {path}")
    return og


def load_graphs(path) -> List[ChemGraph]:
    """Several graphs in one file, each starting with its own `graph` header."""
    graphs: List[ChemGraph] = []
    block: Optional[GraphBlock] = None
    for number, tokens in tokenized_lines(read_text(path)):
        if tokens[0] == "graph":
            if block is not None:
                graphs.append(block.build(number))
            block = GraphBlock()
        if block is None:
            raise ParseError("expected a `graph` header first", line=number)
        if not block.accept(number, tokens):
            raise ParseError(f"unknown directive {tokens[0]!r}", line=number)
    if block is not None:
        graphs.append(block.build())
    return graphs
