import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, freshen
from com.mhire.app.common.errors import DomainError, InternalInvariantError, PreconditionError, TermTypeError
from com.mhire.app.config.config import Config
from com.mhire.app.rewriting.reaction_category.reaction_category import Reaction, reaction_diff
from com.mhire.app.services.disconnection_engine.disconnection_engine import (
    Generator, Kind, Term, Undefined, apply_generator, eval_term, rename, touch, trace_term,
)
from com.mhire.app.services.react_bridge.react_bridge import decompose, image_check, translate

logger = logging.getLogger(__name__)

BLOCKS = {
    (Kind.ION, False): 0,
    (Kind.COV, False): 1,
    (Kind.E_NEG, False): 2,
    (Kind.E_POS, False): 3,
    (Kind.E_POS, True): 4,
    (Kind.E_NEG, True): 5,
    (Kind.COV, True): 6,
    (Kind.ION, True): 7,
    (Kind.RENAME, False): 8,
    (Kind.TOUCH, False): 9,
}
BLOCK_NAMES = ("I", "C", "E<0", "E>=0", "~E>=0", "~E<0", "~C", "~I", "R", "S")
RENAME_BLOCK = 8
MAX_CLEANUP_ROUNDS = 200


def block_of(gen: Generator) -> int:
    return BLOCKS[(gen.kind, gen.bar)]


class _Stuck(Exception):
    """No verified rewrite repairs an out-of-order pair."""


# Shared helpers

def _domain(t: Term, g: Optional[ChemGraph]) -> ChemGraph:
    dom = g if g is not None else t.dom
    if dom is None:
        raise PreconditionError("term needs a domain graph")
    return dom


def _reaction(dom: ChemGraph, gens: Sequence[Generator]) -> Optional[Reaction]:
    try:
        return translate(Term(tuple(gens)), dom)
    except TermTypeError:
        return None


def _trace(dom: ChemGraph, gens: Sequence[Generator]) -> Optional[List[ChemGraph]]:
    try:
        return trace_term(Term(tuple(gens)), dom)
    except TermTypeError:
        return None


def _fresh(taken: Set[str]) -> str:
    name = freshen("_t", taken)
    taken.add(name)
    return name


def _all_names(dom: ChemGraph, gens: Sequence[Generator], *graphs: ChemGraph) -> Set[str]:
    names = set(dom.vertices)
    for gen in gens:
        names.update(gen.names())
    for g in graphs:
        names.update(g.vertices)
    return names


def _interchangeable(g: ChemGraph, x: str, y: str) -> bool:
    """Two binding sites with the same charge and the same labelled neighbourhood."""
    if not (g.is_alpha(x) and g.is_alpha(y)) or g.charge(x) != g.charge(y):
        return False
    return ({n: g.bond(x, n) for n in g.neighbours(x)} == {n: g.bond(y, n) for n in g.neighbours(y)})


def _site_key(g: ChemGraph, x: str) -> Tuple:
    anchors = sorted(g.neighbours(x))
    anchor = anchors[0] if anchors else ""
    return (anchor, str(g.bond(x, anchor)) if anchor else "", g.charge(x))


def _site_moves(source: ChemGraph, target: ChemGraph, fixed: Set[str]) -> Optional[Dict[str, str]]:
    """Renames of binding sites turning `source` into `target`; sites in `fixed` keep their names."""
    remaining: Dict[Tuple, List[str]] = {}
    for y in sorted(target.alpha_vertices()):
        remaining.setdefault(_site_key(target, y), []).append(y)
    movable: Dict[Tuple, List[str]] = {}
    for x in sorted(source.alpha_vertices()):
        key = _site_key(source, x)
        if x in fixed:
            if x not in remaining.get(key, []):
                return None
            remaining[key].remove(x)
        else:
            movable.setdefault(key, []).append(x)
    moves: Dict[str, str] = {}
    for key, sites in movable.items():
        targets = remaining.get(key, [])
        if len(targets) != len(sites):
            return None
        kept = [x for x in sites if x in targets]
        rest_sites = [x for x in sites if x not in kept]
        rest_targets = [y for y in targets if y not in kept]
        moves.update(zip(rest_sites, rest_targets))
    if sum(len(v) for v in remaining.values()) != sum(len(v) for v in movable.values()):
        return None
    try:
        if source.relabel(moves) != target:
            return None
    except DomainError:
        return None
    return moves


# Renaming form

@dataclass
class RenamingForm:
    """Renames split as head (a_k -> b_k) then tail (c_k -> d_k), plus the sites left touched."""
    head: List[Generator] = field(default_factory=list)
    tail: List[Generator] = field(default_factory=list)
    touched: List[str] = field(default_factory=list)

    @property
    def generators(self) -> List[Generator]:
        return self.head + self.tail

    @property
    def sources(self) -> Set[str]:
        return {r.u for r in self.head}

    @property
    def targets(self) -> Set[str]:
        return {r.v for r in self.head}

    @property
    def dummies(self) -> Set[str]:
        return {r.u for r in self.tail}

    @property
    def restored(self) -> Set[str]:
        return {r.v for r in self.tail}


def renaming_form_for(H: ChemGraph, moves: Dict[str, str], taken: Set[str]) -> RenamingForm:
    """Realise the simultaneous rename `moves` on H as a renaming form."""
    moves = {x: y for x, y in moves.items() if x != y}
    touched: List[str] = []
    changed = True
    while changed:
        changed = False
        for x in sorted(moves):
            y = moves[x]
            if y in moves and _interchangeable(H, x, y):
                # x may take y's place directly; y then stays put
                z = moves.pop(y)
                touched.append(y)
                if z == x:
                    moves.pop(x)
                    touched.append(x)
                else:
                    moves[x] = z
                changed = True
                break
    form = RenamingForm(touched=sorted(set(touched)))
    for x in sorted(moves):
        y = moves[x]
        if y in H.vertices:
            c = _fresh(taken)
            form.head.append(rename(x, c))
            form.tail.append(rename(c, y))
        else:
            form.head.append(rename(x, y))
    return form


def to_renaming_form(r_seq: Term, g: Optional[ChemGraph] = None) -> Tuple[RenamingForm, List[Generator]]:
    """Rewrite a typed sequence of renames and touches as a renaming form followed by touches."""
    H = _domain(r_seq, g)
    if any(gen.kind not in (Kind.RENAME, Kind.TOUCH, Kind.ID) for gen in r_seq):
        raise PreconditionError("renaming form needs a sequence of renames")
    visited = trace_term(r_seq, H)
    where = {x: x for x in H.alpha_vertices()}
    for gen in r_seq:
        if gen.kind == Kind.RENAME:
            for x, current in where.items():
                if current == gen.u:
                    where[x] = gen.v
                    break
    moves = {x: y for x, y in where.items() if x != y}
    taken = _all_names(H, r_seq.generators, visited[-1])
    form = renaming_form_for(H, moves, taken)
    body = form.generators
    current = _reaction(H, body)
    target = translate(r_seq, H)
    missing = sorted(target.changed_cod - current.changed_cod)
    touches = [touch(u) for u in missing]
    if _reaction(H, body + touches) != target:
        raise InternalInvariantError("renaming form changes the reaction")
    return form, touches


# ICE passes

def _measure(gens: Sequence[Generator], k: int) -> Tuple[int, int, int, int]:
    misplaced = crossed_rules = crossed_tail = 0
    seen_rules = seen_tail = 0
    for gen in gens:
        b = block_of(gen)
        if b == k:
            if seen_rules or seen_tail:
                misplaced += 1
            crossed_rules += seen_rules
            crossed_tail += seen_tail
        elif b > k:
            if b >= RENAME_BLOCK:
                seen_tail += 1
            else:
                seen_rules += 1
    return misplaced, crossed_rules, crossed_tail, len(gens)


def _is_inverse_pair(g1: Generator, g2: Generator) -> bool:
    if g1.kind != g2.kind or not g1.is_rule or g1.bar == g2.bar:
        return False
    if g1.kind in (Kind.E_POS, Kind.E_NEG):
        return g1.u == g2.u
    if g1.kind == Kind.COV:
        return set(g1.changed) == set(g2.changed)
    return g1.changed == g2.changed


def _net_renaming(before: ChemGraph, window: List[Generator], taken: Set[str]) -> Optional[List[Generator]]:
    """Touches and renames with the same effect as `window`, if the window only moves binding sites."""
    visited = _trace(before, window)
    if visited is None:
        return None
    r = _reaction(before, window)
    fixed = set(before.alpha_vertices()) - set(r.changed_dom)
    moves = _site_moves(before, visited[-1], fixed)
    if moves is None:
        return None
    form = renaming_form_for(before, moves, taken)
    body = form.generators
    current = _reaction(before, body)
    if current is None:
        return None
    touches = [touch(u) for u in sorted(r.changed_dom - current.changed_dom) if u in before.vertices]
    return touches + body


def _swap_candidates(g1: Generator, g2: Generator, before: ChemGraph, taken: Set[str]) -> Iterator[List[Generator]]:
    yield [g2, g1]
    if g1.kind == Kind.TOUCH:
        yield [g2]
    if g1.kind == Kind.RENAME and g1.u != g1.v:
        x, y = g1.u, g1.v
        if y in g2.names() and x not in g2.names():
            moved = g2.renamed({y: x})
            yield [moved, g1]
            yield [moved]
    if _is_inverse_pair(g1, g2):
        replacement = _net_renaming(before, [g1, g2], taken)
        if replacement is not None:
            yield replacement
    clash = [n for n in g2.added if n in before.vertices]
    if g2.added and clash and not g2.bar:
        fresh = {n: _fresh(taken) for n in clash}
        yield [g2.renamed(fresh), g1] + [rename(fresh[n], n) for n in clash]


def _bubble_pass(dom: ChemGraph, gens: List[Generator], k: int, taken: Set[str]) -> List[Generator]:
    """Move every generator of block k left past the generators of later blocks."""
    while True:
        index = next((i for i in range(len(gens) - 1)
                      if block_of(gens[i + 1]) == k and block_of(gens[i]) > k), None)
        if index is None:
            return gens
        visited = _trace(dom, gens[:index + 1])
        before = visited[index]
        pair = gens[index:index + 2]
        expected = _reaction(before, pair)
        measure = _measure(gens, k)
        for candidate in _swap_candidates(pair[0], pair[1], before, taken):
            if _reaction(before, candidate) == expected:
                updated = gens[:index] + candidate + gens[index + 2:]
                break
        else:
            raise _Stuck(f"{pair[0]};{pair[1]}")
        if _measure(updated, k) >= measure:
            raise InternalInvariantError(f"{BLOCK_NAMES[k]} pass did not decrease its measure")
        logger.debug(f"{BLOCK_NAMES[k]} pass: {pair[0]};{pair[1]} -> {';'.join(map(str, candidate))}")
        gens = updated


def to_ice_form(t: Term, g: Optional[ChemGraph] = None) -> Term:
    dom = _domain(t, g)
    expected = translate(t, dom)
    gens = [gen for gen in t if gen.kind != Kind.ID]
    taken = _all_names(dom, gens, expected.cod)
    try:
        for k in range(RENAME_BLOCK + 1):
            gens = _bubble_pass(dom, gens, k, taken)
    except _Stuck as e:
        logger.debug(f"ICE passes stuck at {e}; rebuilding from the reaction")
        rebuilt, iota = decompose(expected)
        if not image_check(iota) or iota.dom != iota.cod:
            raise InternalInvariantError("term reaction needs a relabelling factor")
        gens = list(rebuilt.generators)
    result = Term(tuple(gens), dom, expected.cod)
    if translate(result) != expected:
        raise InternalInvariantError("ICE rewriting changed the reaction")
    return result


@dataclass(frozen=True)
class IceForm:
    """The ten generator blocks of a term in ICE-form, in block order."""
    blocks: Tuple[Tuple[Generator, ...], ...]
    dom: ChemGraph

    @classmethod
    def of(cls, t: Term, g: Optional[ChemGraph] = None) -> "IceForm":
        dom = _domain(t, g)
        eval_term(t, dom)
        gens = [gen for gen in t if gen.kind != Kind.ID]
        order = [block_of(gen) for gen in gens]
        if order != sorted(order):
            raise PreconditionError(f"term is not in ICE-form: {t}")
        grouped: List[List[Generator]] = [[] for _ in BLOCK_NAMES]
        for gen, k in zip(gens, order):
            grouped[k].append(gen)
        return cls(tuple(tuple(block) for block in grouped), dom)

    def block(self, name: str) -> Tuple[Generator, ...]:
        if name not in BLOCK_NAMES:
            raise DomainError(f"unknown block {name!r}")
        return self.blocks[BLOCK_NAMES.index(name)]

    def term(self) -> Term:
        return Term(tuple(gen for block in self.blocks for gen in block), self.dom)


# Normal form structure

@dataclass
class NormalForm:
    """A term split into its rule blocks, renaming form and touches, with the derived name sets."""
    rules: List[Generator]
    renames: RenamingForm
    touches: List[str]
    start: ChemGraph
    visited: List[ChemGraph]

    @property
    def added(self) -> Set[str]:
        return {n for gen in self.rules if not gen.bar for n in gen.added}

    @property
    def removed(self) -> Set[str]:
        return {n for gen in self.rules if gen.bar for n in gen.added}

    @property
    def superscripts(self) -> Set[str]:
        return {n for gen in self.rules for n in gen.changed}

    def generators(self) -> List[Generator]:
        return self.rules + self.renames.generators + [touch(u) for u in self.touches]


def _split_renames(renames: List[Generator], H: ChemGraph) -> Optional[RenamingForm]:
    targets: Set[str] = set()
    split = len(renames)
    for n, r in enumerate(renames):
        if r.u in targets:
            split = n
            break
        targets.add(r.v)
    form = RenamingForm(head=renames[:split], tail=renames[split:])
    A, B, C, D = form.sources, form.targets, form.dummies, form.restored
    if len(A) != len(form.head) or len(C) != len(form.tail) or A & B or not C <= B or not D <= A:
        return None
    origin = {r.v: r.u for r in form.head}
    for r in form.tail:
        if _interchangeable(H, origin[r.u], r.v):
            return None
    return form


def parse_normal_form(t: Term, g: Optional[ChemGraph] = None) -> Optional[NormalForm]:
    """Split a typed term into ICER blocks, or None if it is not in that shape."""
    dom = _domain(t, g)
    gens = [gen for gen in t if gen.kind != Kind.ID]
    blocks = [block_of(gen) for gen in gens]
    if blocks != sorted(blocks):
        return None
    visited = trace_term(Term(tuple(gens)), dom)
    rules = [gen for gen in gens if block_of(gen) < RENAME_BLOCK]
    renames = [gen for gen in gens if gen.kind == Kind.RENAME]
    H = visited[len(rules)]
    form = _split_renames(renames, H)
    if form is None:
        return None
    return NormalForm(rules, form, [gen.u for gen in gens if gen.kind == Kind.TOUCH], H, visited)


def _consumed(gen: Generator) -> Tuple[str, ...]:
    """Binding sites a connection deletes or absorbs."""
    if not gen.bar:
        return ()
    if gen.kind == Kind.E_POS:
        return (gen.v,)
    return gen.added


def _exchange_options(nf: NormalForm) -> Iterator[Tuple[int, str, str]]:
    """Connections at p consuming a, and renamed sites z that the connection could consume instead."""
    renames = nf.renames.generators
    for p, gen in enumerate(nf.rules):
        for a in _consumed(gen):
            for r in renames:
                z = r.u
                if z == a or z in gen.names() or z not in nf.visited[p]:
                    continue
                swapped = gen.renamed({a: z})
                if not isinstance(apply_generator(swapped, nf.visited[p]), Undefined):
                    yield p, a, z


def _conflicting_pairs(rules: List[Generator]) -> Iterator[Tuple[int, int, int]]:
    """Disconnection/connection pairs forbidden in a normal form, tagged with the condition they break."""
    for i, d in enumerate(rules):
        if d.bar or d.kind != Kind.E_POS:
            continue
        same = [j for j, h in enumerate(rules) if h.bar and h.kind == Kind.E_POS and h.u == d.u]
        same.sort(key=lambda j: (rules[j].v != d.v, j))
        for j in same:
            yield 7, i, j
    for kind in (Kind.E_NEG, Kind.COV):
        for i, d in enumerate(rules):
            if d.bar or d.kind != kind:
                continue
            for j, h in enumerate(rules):
                if h.bar and h.kind == kind and _is_inverse_pair(d, h):
                    yield 6, i, j
    for i, d in enumerate(rules):
        if d.bar or d.kind != Kind.ION:
            continue
        for j, h in enumerate(rules):
            if h.bar and h.kind == Kind.ION and h.changed == d.changed:
                electron = any(e.kind in (Kind.E_NEG, Kind.E_POS) and e.u == d.v for e in rules)
                if not electron:
                    yield 8, i, j


def check_normal_form(t: Term, g: Optional[ChemGraph] = None) -> List[int]:
    """Failed normal-form conditions 1-8; [0] when the term is not even in ICER form."""
    nf = parse_normal_form(t, g)
    if nf is None:
        return [0]
    failed: Set[int] = set()
    A, B, D = nf.renames.sources, nf.renames.targets, nf.renames.restored
    if len(nf.touches) != len(set(nf.touches)):
        failed.add(1)
    if (nf.superscripts | A | B) & set(nf.touches):
        failed.add(2)
    if not (nf.added - nf.removed) <= (A - D):
        failed.add(3)
    if nf.added & B:
        failed.add(4)
    targets = {r.u: r.v for r in nf.renames.generators}
    for p, a, z in _exchange_options(nf):
        if targets.get(z) == a:
            failed.add(5)
    for condition, _, _ in _conflicting_pairs(nf.rules):
        failed.add(condition)
    return sorted(failed)


# Normalisation

def _assemble(dom: ChemGraph, rules: List[Generator], target: Reaction, taken: Set[str]) -> Optional[List[Generator]]:
    """Complete a rule part with the renaming form and touches that reproduce `target`."""
    visited = _trace(dom, rules)
    if visited is None:
        return None
    H = visited[-1]
    ruled = _reaction(dom, rules)
    fixed = {x for x in H.alpha_vertices() if x not in ruled.changed_cod and x not in target.changed_dom}
    moves = _site_moves(H, target.cod, fixed)
    if moves is None:
        return None
    form = renaming_form_for(H, moves, taken)
    gens = rules + form.generators
    current = _reaction(dom, gens)
    if current is None:
        return None
    gens += [touch(u) for u in sorted(target.changed_cod - current.changed_cod)]
    return gens if _reaction(dom, gens) == target else None


def _bring_adjacent(dom: ChemGraph, rules: List[Generator], i: int, j: int) -> Optional[Tuple[List[Generator], int]]:
    rules = list(rules)
    while j > i + 1:
        visited = _trace(dom, rules)
        moved = False
        for a, b in ((j - 1, j), (i, i + 1)):
            pair = [rules[a], rules[b]]
            expected = _reaction(visited[a], pair)
            if _reaction(visited[a], pair[::-1]) == expected:
                rules[a], rules[b] = rules[b], rules[a]
                if b == j:
                    j -= 1
                else:
                    i += 1
                moved = True
                break
        if not moved:
            return None
    return rules, i


def _cancel(dom: ChemGraph, rules: List[Generator], i: int, j: int, target: Reaction,
            taken: Set[str]) -> Optional[List[Generator]]:
    dropped = rules[:i] + rules[i + 1:j] + rules[j + 1:]
    if _assemble(dom, dropped, target, taken) is not None:
        return dropped
    adjacent = _bring_adjacent(dom, rules, i, j)
    if adjacent is None:
        return None
    rules, i = adjacent
    dropped = rules[:i] + rules[i + 2:]
    if _assemble(dom, dropped, target, taken) is not None:
        return dropped
    visited = _trace(dom, rules)
    replacement = _net_renaming(visited[i], rules[i:i + 2], taken)
    if replacement is None:
        return None
    where = {x: x for x in visited[i].vertices}
    for gen in replacement:
        if gen.kind == Kind.RENAME:
            for x, current in where.items():
                if current == gen.u:
                    where[x] = gen.v
                    break
    back = {y: x for x, y in where.items() if x != y}
    rewired = rules[:i] + [gen.renamed(back) for gen in rules[i + 2:]]
    return rewired if _assemble(dom, rewired, target, taken) is not None else None


def _dummy_discipline(dom: ChemGraph, rules: List[Generator], target: Reaction, taken: Set[str]) -> List[Generator]:
    """Give every surviving created site a dummy name that the renaming form then restores."""
    gens = _assemble(dom, rules, target, taken)
    nf = parse_normal_form(Term(tuple(gens)), dom)
    A, B, D = nf.renames.sources, nf.renames.targets, nf.renames.restored
    offending = sorted(((nf.added - nf.removed) - (A - D)) | (nf.added & B))
    for x in offending:
        start = next(n for n, gen in enumerate(rules) if not gen.bar and x in gen.added)
        k = _fresh(taken)
        candidate = rules[:start] + [gen.renamed({x: k}) for gen in rules[start:]]
        if _assemble(dom, candidate, target, taken) is not None:
            rules = candidate
    return rules


def _exchange_connections(dom: ChemGraph, rules: List[Generator], target: Reaction,
                          taken: Set[str]) -> List[Generator]:
    """Let connections consume the site a rename would otherwise move into their place."""
    for _ in range(MAX_CLEANUP_ROUNDS):
        gens = _assemble(dom, rules, target, taken)
        nf = parse_normal_form(Term(tuple(gens)), dom)
        targets = {r.u: r.v for r in nf.renames.generators}
        for p, a, z in _exchange_options(nf):
            if targets.get(z) != a:
                continue
            swap = {a: z, z: a}
            candidate = rules[:p] + [rules[p].renamed({a: z})] + [gen.renamed(swap) for gen in rules[p + 1:]]
            if _assemble(dom, candidate, target, taken) is not None:
                rules = candidate
                break
        else:
            return rules
    raise InternalInvariantError("connection exchange did not settle")


def _complete(dom: ChemGraph, rules: List[Generator], target: Reaction, taken: Set[str]) -> Optional[Term]:
    """Run the dummy and exchange clean-ups on a rule part and assemble it, if the result is normal."""
    if _assemble(dom, rules, target, taken) is None:
        return None
    rules = _dummy_discipline(dom, rules, target, taken)
    rules = _exchange_connections(dom, rules, target, taken)
    gens = _assemble(dom, rules, target, taken)
    if gens is None:
        return None
    result = Term(tuple(gens), dom, target.cod)
    return result if not check_normal_form(result) else None


def to_normal_form(t: Term, g: Optional[ChemGraph] = None) -> Term:
    dom = _domain(t, g)
    target = translate(t, dom)
    ice = to_ice_form(t, dom)
    rules = [gen for gen in ice if block_of(gen) < RENAME_BLOCK]
    taken = _all_names(dom, ice.generators, target.cod)

    for _ in range(MAX_CLEANUP_ROUNDS):
        for condition, i, j in _conflicting_pairs(rules):
            cancelled = _cancel(dom, rules, i, j, target, taken)
            if cancelled is not None:
                logger.debug(f"Condition {condition}: cancelled {rules[i]} against {rules[j]}")
                rules = cancelled
                break
        else:
            break
    else:
        raise InternalInvariantError("cancellation did not settle")

    rules = _dummy_discipline(dom, rules, target, taken)
    rules = _exchange_connections(dom, rules, target, taken)
    gens = _assemble(dom, rules, target, taken)
    if gens is None:
        raise InternalInvariantError("cannot complete rule part to the term's reaction")
    result = Term(tuple(gens), dom, target.cod)
    failed = check_normal_form(result)
    if failed:
        raise InternalInvariantError(f"normalisation left conditions {failed} unsatisfied")
    logger.debug(f"Normal form of {len(t)} generators has {len(result)}")
    return result


# Equivalence of normal forms

def _electron_options(nf: NormalForm) -> Iterator[Tuple[int, str, str]]:
    """E+ disconnections at p taking site v, and sites z interchangeable with v at that point."""
    for p, gen in enumerate(nf.rules):
        if gen.bar or gen.kind != Kind.E_POS:
            continue
        before = nf.visited[p]
        for z in sorted(before.alpha_vertices()):
            if z != gen.v and z not in gen.names() and _interchangeable(before, gen.v, z):
                yield p, gen.v, z


def _electron_swapped(nf: NormalForm, p: int, v: str, z: str) -> List[Generator]:
    """The rule part with the disconnection at p taking z; later rules follow the swapped names."""
    swap = {v: z, z: v}
    return nf.rules[:p] + [nf.rules[p].renamed({v: z})] + [gen.renamed(swap) for gen in nf.rules[p + 1:]]


def _canonical_names(count: int, taken: Set[str]) -> List[str]:
    names, k = [], 0
    while len(names) < count:
        k += 1
        if f"_{k}" not in taken:
            names.append(f"_{k}")
    return names


def _oriented(gen: Generator) -> Generator:
    if gen.kind == Kind.COV and gen.u > gen.v:
        return replace(gen, u=gen.v, v=gen.u, a=gen.b, b=gen.a)
    return gen


def _arranged(nf: NormalForm, rho: Dict[str, str]) -> List[Generator]:
    """The generators of nf under dummy names rho, with every free choice made in sorted order."""
    groups: Dict[Tuple, List[Generator]] = {}
    for gen in nf.rules:
        gen = _oriented(gen.renamed(rho))
        groups.setdefault((block_of(gen), gen.kind, gen.changed), []).append(gen)
    rules: List[Generator] = []
    for gens in groups.values():
        if gens[0].added:
            firsts = sorted(gen.a for gen in gens)
            seconds = sorted(gen.b for gen in gens)
            gens = [replace(gen, a=a, b=b) for gen, a, b in zip(gens, firsts, seconds)]
        rules.extend(gens)
    rules.sort(key=lambda gen: (block_of(gen), str(gen)))

    classes: Dict[Tuple, List[Generator]] = {}
    for r in nf.renames.head:
        classes.setdefault(_site_key(nf.start, r.u), []).append(r)
    head: List[Generator] = []
    for entries in classes.values():
        sources = sorted(rho.get(r.u, r.u) for r in entries)
        targets = sorted(rho.get(r.v, r.v) for r in entries)
        head.extend(rename(a, b) for a, b in zip(sources, targets))
    head.sort(key=str)
    tail = sorted((r.renamed(rho) for r in nf.renames.tail), key=str)
    return rules + head + tail + [touch(u) for u in sorted(set(nf.touches))]


def _slots_of(gen: Generator, x: str) -> Tuple[str, ...]:
    return tuple(slot for slot in ("u", "v", "a", "b") if getattr(gen, slot) == x)


def _dummy_classes(nf: NormalForm, dummies: Sequence[str]) -> List[List[str]]:
    """Dummies grouped by how the form uses them, groups in a name-independent order.

    Other dummies are referred to by their current class, refined until stable.
    """
    rules = [_oriented(gen) for gen in nf.rules]
    renames = nf.renames.generators
    colour = {x: "" for x in dummies}

    def ref(n: str, x: str) -> str:
        if n == x:
            return "@"
        return f"#{colour[n]}" if n in colour else n

    for _ in range(len(dummies) + 1):
        signatures = {}
        for x in dummies:
            site = str(_site_key(nf.start, x)) if x in nf.start else ""
            uses = sorted(str((block_of(gen), gen.kind, tuple(ref(n, x) for n in gen.changed), _slots_of(gen, x)))
                          for gen in rules if x in gen.names())
            moves = sorted(f"{ref(r.u, x)}>{ref(r.v, x)}" for r in renames if x in (r.u, r.v))
            signatures[x] = (colour[x], site, tuple(uses), tuple(moves))
        ranked = sorted(set(signatures.values()))
        refined = {x: f"{ranked.index(signatures[x]):04d}" for x in dummies}
        if len(set(refined.values())) == len(set(colour.values())):
            colour = refined
            break
        colour = refined
    classes: Dict[str, List[str]] = {}
    for x in sorted(dummies):
        classes.setdefault(colour[x], []).append(x)
    return [classes[c] for c in sorted(classes)]


def canonical_form(t: Term, g: Optional[ChemGraph] = None) -> Term:
    """A representative of the normal-form class of t that depends only on that class, up to exchanges."""
    dom = _domain(t, g)
    nf = parse_normal_form(t, dom)
    if nf is None:
        raise PreconditionError("term is not in ICER form")
    dummies = sorted(nf.added | nf.renames.dummies)
    others = _all_names(dom, t.generators) - set(dummies)
    names = _canonical_names(len(dummies), others)
    classes = _dummy_classes(nf, dummies)
    limit = Config().nf_max_dummy_permutations
    count = math.prod(math.factorial(len(c)) for c in classes)
    if count <= limit:
        orders = itertools.product(*(itertools.permutations(c) for c in classes))
    else:
        logger.debug(f"{count} dummy orders exceed the permutation limit {limit}; keeping one per class")
        orders = iter([tuple(tuple(c) for c in classes)])
    best: Optional[List[Generator]] = None
    for order in orders:
        ordered = [x for group in order for x in group]
        arranged = _arranged(nf, dict(zip(ordered, names)))
        if best is None or [str(x) for x in arranged] < [str(x) for x in best]:
            best = arranged
    return Term(tuple(best), dom, t.cod)


@lru_cache(maxsize=4096)
def _cached_key(t: Term, dom: ChemGraph, limit: int) -> str:
    return str(canonical_form(t, dom))


def _canonical_key(t: Term, dom: ChemGraph) -> str:
    return _cached_key(t, dom, Config().nf_max_dummy_permutations)


def _exchanged(nf: NormalForm, p: int, a: str, z: str) -> List[Generator]:
    """Let the connection at p consume z instead of a; the rename of z then moves a."""
    swap = {a: z, z: a}
    rules = nf.rules[:p] + [nf.rules[p].renamed({a: z})] + [gen.renamed(swap) for gen in nf.rules[p + 1:]]
    head = [rename(a, r.v) if r.u == z else r for r in nf.renames.head]
    return rules + head + nf.renames.tail + [touch(u) for u in nf.touches]


def nf_equivalent(t: Term, s: Term, g: Optional[ChemGraph] = None) -> bool:
    """Decide whether two ICER forms are related by the normal-form moves."""
    dom = _domain(t, g)
    r_t, r_s = translate(t, dom), translate(s, dom)
    if r_t.cod != r_s.cod:
        return False
    goal = _canonical_key(s, dom)
    start = Term(tuple(gen for gen in t if gen.kind != Kind.ID), dom)
    if _canonical_key(start, dom) == goal:
        return True

    limit = Config().nf_search_max_states
    taken = _all_names(dom, t.generators, r_t.cod) | _all_names(dom, s.generators)
    seen = {_canonical_key(start, dom)}
    queue = deque([start])
    while queue and len(seen) < limit:
        state = queue.popleft()
        for moved in _moves(parse_normal_form(state, dom), dom, r_t, taken):
            key = _canonical_key(moved, dom)
            if key == goal:
                logger.debug(f"Normal forms related after exploring {len(seen)} states")
                return True
            if key not in seen:
                seen.add(key)
                queue.append(moved)
    if queue:
        logger.warning(f"Normal form search stopped at {limit} states")
    return False


def _moves(nf: NormalForm, dom: ChemGraph, target: Reaction, taken: Set[str]) -> Iterator[Term]:
    """Normal forms one exchange or one E+ site choice away from nf, with the same reaction."""
    for p, a, z in _exchange_options(nf):
        moved = Term(tuple(_exchanged(nf, p, a, z)), dom)
        if _reaction(dom, moved.generators) == target and parse_normal_form(moved, dom) is not None:
            yield moved
    for p, v, z in _electron_options(nf):
        moved = _complete(dom, _electron_swapped(nf, p, v, z), target, taken)
        if moved is not None:
            yield moved


def decide_equiv(t: Term, s: Term, g: ChemGraph) -> bool:
    """Decide t = s on g through their reactions, cross-checked against their normal forms."""
    if eval_term(t, g) != eval_term(s, g):
        logger.info("Terms reach different graphs")
        return False
    by_reaction = translate(t, g) == translate(s, g)
    by_normal_form = nf_equivalent(to_normal_form(t, g), to_normal_form(s, g), g)
    if by_reaction != by_normal_form:
        raise InternalInvariantError(
            f"reaction comparison says {by_reaction} but normal forms say {by_normal_form}")
    return by_reaction


def explain_difference(t: Term, s: Term, g: ChemGraph) -> List[str]:
    """Reaction components on which two terms differ, with their normal forms."""
    lines = [f"normal form: {canonical_form(to_normal_form(t, g))}",
             f"normal form: {canonical_form(to_normal_form(s, g))}"]
    lines += reaction_diff(translate(t, g), translate(s, g))
    return lines
