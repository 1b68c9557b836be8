import logging
from typing import Dict, Iterator, List, Optional, Set, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC, cov as covalent, freshen
from com.mhire.app.common.errors import InternalInvariantError, PreconditionError
from com.mhire.app.rewriting.reaction_category.reaction_category import (
    Reaction, compose, dagger, identity, touch as touch_reaction, validate_reaction,
)
from com.mhire.app.services.disconnection_engine.disconnection_engine import (
    Generator, Kind, Term, Undefined, apply_generator, cov, dagger_term, e_neg, e_pos, ion, rename,
    touch, trace_term,
)

logger = logging.getLogger(__name__)


def generator_reaction(gen: Generator, before: ChemGraph, after: ChemGraph) -> Reaction:
    """The reaction of a single well-typed generator step before -> after."""
    if gen.kind == Kind.ID:
        return identity(before)
    if gen.kind == Kind.TOUCH:
        return touch_reaction(before, {gen.u})
    if gen.kind == Kind.RENAME:
        rest = {x: x for x in before.vertices if x != gen.u}
        return Reaction(before, after, {gen.u}, {gen.v}, {}, rest)
    if gen.bar:
        return dagger(generator_reaction(gen.dagger(), after, before))
    changed = set(gen.changed)
    chem = {x: x for x in before.chemical_vertices(changed)}
    rest = {x: x for x in before.vertices - changed}
    return Reaction(before, after, changed, changed | set(gen.added), chem, rest)


def translate(t: Term, g: Optional[ChemGraph] = None) -> Reaction:
    """Fold the per-generator reactions of `t` along its evaluation on `g` (or its own domain)."""
    dom = g if g is not None else t.dom
    if dom is None:
        raise PreconditionError("translate needs a typed term or a domain graph")
    visited = trace_term(t, dom)
    reaction = identity(dom)
    for gen, before, after in zip(t.generators, visited, visited[1:]):
        reaction = compose(reaction, generator_reaction(gen, before, after))
    return reaction


def image_check(r: Reaction) -> bool:
    """True iff `r` needs no isomorphism factor: both of its maps are identities."""
    return all(u == w for u, w in r.chem_map.items()) and all(a == w for a, w in r.rest_map.items())


def _fresh_names(taken: Set[str]) -> Iterator[str]:
    k = 0
    while True:
        k += 1
        name = f"_d{k}"
        if name not in taken:
            taken.add(name)
            yield name


class _Builder:
    """Applies generators one at a time, keeping the term and the current graph in step."""

    def __init__(self, g: ChemGraph):
        self.graph = g
        self.generators: List[Generator] = []

    def push(self, gen: Generator):
        out = apply_generator(gen, self.graph)
        if isinstance(out, Undefined):
            raise PreconditionError(f"reaction cannot be decomposed: {gen} {out}")
        self.graph = out
        self.generators.append(gen)


def _held_charges(g: ChemGraph, changed: Set[str]) -> Set[str]:
    """Changed chemical vertices ionically bonded outside `changed`.

    The outside partner keeps its charge and the bond, so these vertices keep theirs too.
    """
    return {u for u in g.chemical_vertices(changed) if g.ionic_neighbours(u) - changed}


def _disconnect_all(g: ChemGraph, changed: Set[str], names: Iterator[str]) -> _Builder:
    """Break every ionic and covalent bond, negative charge and binding-site bond inside `changed`."""
    builder = _Builder(g)
    chem = sorted(g.chemical_vertices(changed))
    held = _held_charges(g, changed)
    for u in sorted(g.positive_vertices(changed) - held):
        for v in sorted(g.negative_vertices(changed) - held):
            if g.bond(u, v) == IONIC:
                builder.push(ion(u, v))
    for n, u in enumerate(chem):
        for v in chem[n + 1:]:
            for _ in range(covalent(g.bond(u, v))):
                builder.push(cov(u, v, next(names), next(names)))
    free = [u for u in chem if u not in held]
    for u in free:
        for _ in range(-g.charge(u) if g.charge(u) < 0 else 0):
            builder.push(e_neg(u, next(names), next(names)))
    pool = set(changed) | (builder.graph.vertices - g.vertices)
    for u in free:
        for a in sorted(builder.graph.covalent_neighbours(u)):
            if a in pool and builder.graph.is_alpha(a):
                builder.push(e_pos(u, a))
    return builder


def _site_classes(g: ChemGraph, pool: Set[str]) -> Dict[Tuple, List[str]]:
    classes: Dict[Tuple, List[str]] = {}
    for a in sorted(pool):
        anchors = sorted(g.neighbours(a))
        if not anchors:
            key = ("free", g.charge(a))
        else:
            key = ("ionic" if g.bond(a, anchors[0]) == IONIC else "covalent", anchors[0], g.charge(a))
        classes.setdefault(key, []).append(a)
    return classes


def decompose(r: Reaction) -> Tuple[Term, Reaction]:
    """Factor `r` as translate(t) followed by a pure relabelling isomorphism `iota`."""
    problems = validate_reaction(r)
    if problems:
        raise PreconditionError(f"invalid reaction: {problems[0]}")
    A, C = r.dom, r.cod
    U_A = set(r.changed_dom)

    # B is C with chemical and unchanged vertices renamed back to their names in A
    to_B: Dict[str, str] = {w: u for u, w in r.chem_map.items()}
    to_B.update({w: a for a, w in r.rest_map.items()})
    taken = set(to_B.values())
    for c in sorted(C.alpha_vertices(r.changed_cod)):
        to_B[c] = freshen(c, taken)
        taken.add(to_B[c])
    B = C.relabel(to_B)
    U_B = {to_B[c] for c in r.changed_cod}
    iota = Reaction(B, C, frozenset(), frozenset(), {}, {x: c for c, x in to_B.items()})

    names = _fresh_names(set(A.vertices) | set(B.vertices) | set(C.vertices))
    forward = _disconnect_all(A, U_A, names)
    backward = _disconnect_all(B, U_B, names)
    X, X_prime = forward.graph, backward.graph

    pool = (U_A & X.alpha_vertices()) | (X.vertices - A.vertices)
    pool_prime = (U_B & X_prime.alpha_vertices()) | (X_prime.vertices - B.vertices)
    pairing: Dict[str, str] = {}
    left_classes, right_classes = _site_classes(X, pool), _site_classes(X_prime, pool_prime)
    if {k: len(v) for k, v in left_classes.items()} != {k: len(v) for k, v in right_classes.items()}:
        raise PreconditionError("binding sites of the two sides do not correspond")
    for key, sites in left_classes.items():
        pairing.update(zip(right_classes[key], sites))
    if X_prime.relabel(pairing) != X:
        raise PreconditionError("fully disconnected sides differ")

    connections = dagger_term(Term(tuple(backward.generators))).renamed(pairing)
    builder = _Builder(X)
    builder.generators = list(forward.generators)
    for gen in connections:
        builder.push(gen)

    # Surviving binding sites: move off old names, then onto their names in B
    survivors = {pairing[b]: b for b in sorted(B.alpha_vertices(U_B))}
    parked: Dict[str, str] = {}
    for q in sorted(survivors):
        if q in A.vertices:
            parked[q] = next(names)
            builder.push(rename(q, parked[q]))
    for q, b in sorted(survivors.items()):
        builder.push(rename(parked.get(q, q), b))
    for u in sorted(U_B):
        builder.push(touch(u))

    if builder.graph != B:
        raise InternalInvariantError("decomposition does not reach the relabelled codomain")
    t = Term(tuple(builder.generators), A, B)
    image = translate(t)
    if image.changed_dom != frozenset(U_A) or image.changed_cod != frozenset(U_B):
        raise InternalInvariantError(
            f"decomposition changes {sorted(image.changed_dom)} -> {sorted(image.changed_cod)}")
    if compose(image, iota) != r:
        raise InternalInvariantError("decomposition does not factor the reaction")
    logger.info(f"Decomposed reaction on {len(U_A)} changed vertices into {len(t)} generators")
    return t, iota
