import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph
from com.mhire.app.chemistry.graph_morphisms.graph_morphisms import GraphMorphism
from com.mhire.app.common.errors import DomainError, ParseError
from com.mhire.app.rewriting.dpo_engine.dpo_engine import ReactionInstance, ReactionScheme
from com.mhire.app.rewriting.reaction_category.reaction_category import Reaction
from com.mhire.app.utils.format_utility.graph_format import (
    GraphBlock, Line, load_graph, print_graph, read_text, tokenized_lines,
)

logger = logging.getLogger(__name__)


class _Document:
    """A file made of `begin <role>` ... `end` graph blocks, graph references and directive lines."""

    def __init__(self, text: str, base_dir: Optional[Path] = None, kind: str = ""):
        self.base_dir = base_dir
        self.graphs: Dict[str, ChemGraph] = {}
        self.directives: List[Line] = []
        self.header: Optional[Line] = None
        block: Optional[GraphBlock] = None
        role, start = "", 0
        for number, tokens in tokenized_lines(text):
            if block is not None:
                if tokens == ["end"]:
                    self._add(role, block.build(start), start)
                    block = None
                elif not block.accept(number, tokens):
                    raise ParseError(f"unexpected {tokens[0]!r} inside graph block", line=number)
                continue
            if tokens[0] == "begin":
                if len(tokens) != 2:
                    raise ParseError("expected `begin <role>`", line=number)
                block, role, start = GraphBlock(), tokens[1], number
            elif self.header is None and kind and tokens[0] == kind:
                self.header = (number, tokens)
            else:
                self.directives.append((number, tokens))
        if block is not None:
            raise ParseError(f"graph block {role!r} is not closed", line=start)

    def _add(self, role: str, g: ChemGraph, line: int):
        if role in self.graphs:
            raise ParseError(f"graph {role!r} given twice", line=line)
        self.graphs[role] = g

    def reference(self, role: str, path: str, line: int):
        target = Path(path)
        if self.base_dir is not None and not target.is_absolute():
            target = self.base_dir / target
        self._add(role, load_graph(target), line)

    def graph(self, role: str) -> ChemGraph:
        if role not in self.graphs:
            raise ParseError(f"missing graph {role!r}")
        return self.graphs[role]


def _pairs(lines: List[Line], head: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for number, tokens in lines:
        if tokens[0] != head:
            continue
        if len(tokens) != 3:
            raise ParseError(f"expected `{head} <u> <v>`", line=number)
        if tokens[1] in pairs:
            raise ParseError(f"{tokens[1]} mapped twice", line=number)
        pairs[tokens[1]] = tokens[2]
    return pairs


def _names(lines: List[Line], head: str) -> frozenset:
    found = set()
    for _, tokens in lines:
        if tokens[0] == head:
            found.update(tokens[1:])
    return frozenset(found)


def _check_heads(lines: List[Line], allowed: Tuple[str, ...]):
    for number, tokens in lines:
        if tokens[0] not in allowed:
            raise ParseError(f"unknown directive {tokens[0]!r}", line=number)


def _block(role: str, g: ChemGraph) -> str:
    return f"begin {role}\n{print_graph(g)}end\n"


# Reactions

def parse_reaction(text: str, base_dir: Optional[Path] = None) -> Reaction:
    doc = _Document(text, base_dir, kind="reaction")
    _check_heads(doc.directives, ("dom", "cod", "changed-dom", "changed-cod", "b", "i"))
    for number, tokens in doc.directives:
        if tokens[0] in ("dom", "cod"):
            if len(tokens) != 2:
                raise ParseError(f"expected `{tokens[0]} <file>`", line=number)
            doc.reference(tokens[0], tokens[1], number)
    try:
        return Reaction(
            doc.graph("dom"), doc.graph("cod"),
            _names(doc.directives, "changed-dom"), _names(doc.directives, "changed-cod"),
            _pairs(doc.directives, "b"), _pairs(doc.directives, "i"),
        )
    except DomainError as e:
        raise ParseError(e.detail)


def print_reaction(r: Reaction) -> str:
    lines = ["reaction", _block("dom", r.dom) + _block("cod", r.cod).rstrip("\n")]
    lines.append(" ".join(["changed-dom"] + sorted(r.changed_dom)))
    lines.append(" ".join(["changed-cod"] + sorted(r.changed_cod)))
    lines += [f"b {u} {w}" for u, w in sorted(r.chem_map.items())]
    lines += [f"i {a} {w}" for a, w in sorted(r.rest_map.items())]
    return "\n".join(lines) + "\n"


def load_reaction(path) -> Reaction:
    return parse_reaction(read_text(path), Path(path).parent)


# Morphisms

def parse_morphism(text: str, base_dir: Optional[Path] = None) -> GraphMorphism:
    doc = _Document(text, base_dir, kind="morphism")
    if doc.header is not None and len(doc.header[1]) > 1:
        number, tokens = doc.header
        if len(tokens) != 3:
            raise ParseError("expected `morphism [<domfile> <codfile>]`", line=number)
        doc.reference("dom", tokens[1], number)
        doc.reference("cod", tokens[2], number)
    _check_heads(doc.directives, ("map",))
    try:
        return GraphMorphism(doc.graph("dom"), doc.graph("cod"), _pairs(doc.directives, "map"))
    except DomainError as e:
        raise ParseError(e.detail)


def print_morphism(f: GraphMorphism) -> str:
    lines = ["morphism", _block("dom", f.dom) + _block("cod", f.cod).rstrip("\n")]
    lines += [f"map {a} {b}" for a, b in sorted(f.mapping.items())]
    return "\n".join(lines) + "\n"


def load_morphism(path) -> GraphMorphism:
    return parse_morphism(read_text(path), Path(path).parent)


# Schemes and instances

def parse_scheme(text: str, base_dir: Optional[Path] = None) -> ReactionScheme:
    doc = _Document(text, base_dir, kind="scheme")
    name = ""
    if doc.header is not None and len(doc.header[1]) > 1:
        name = doc.header[1][1]
    _check_heads(doc.directives, ("left", "right"))
    left, interface, right = doc.graph("left"), doc.graph("interface"), doc.graph("right")
    try:
        f = GraphMorphism(interface, left, _pairs(doc.directives, "left"))
        g = GraphMorphism(interface, right, _pairs(doc.directives, "right"))
    except DomainError as e:
        raise ParseError(e.detail)
    return ReactionScheme(left, interface, right, f, g, name=name)


def print_scheme(s: ReactionScheme) -> str:
    parts = [f"scheme {s.name}".rstrip(), _block("left", s.left) + _block("interface", s.interface)
             + _block("right", s.right).rstrip("\n")]
    parts += [f"left {k} {a}" for k, a in sorted(s.f.mapping.items())]
    parts += [f"right {k} {b}" for k, b in sorted(s.g.mapping.items())]
    return "\n".join(parts) + "\n"


def load_scheme(path) -> ReactionScheme:
    s = parse_scheme(read_text(path), Path(path).parent)
    if not s.name:
        s = ReactionScheme(s.left, s.interface, s.right, s.f, s.g, name=Path(path).stem)
    return s


def print_instance(inst: ReactionInstance) -> str:
    """The five graphs of a double pushout and every map between them."""
    parts = [f"instance {inst.scheme.name}".rstrip()]
    for role, g in (("left", inst.scheme.left), ("interface", inst.scheme.interface),
                    ("right", inst.scheme.right), ("C", inst.C), ("D", inst.D), ("E", inst.E)):
        parts.append(_block(role, g).rstrip("\n"))
    for label, f in (("m", inst.m), ("m_hat", inst.m_hat), ("f_prime", inst.f_prime),
                     ("m_result", inst.m_result), ("g_prime", inst.g_prime)):
        parts += [f"{label} {a} {b}" for a, b in sorted(f.mapping.items())]
    return "\n".join(parts) + "\n"
