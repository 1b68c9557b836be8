import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC, BondLabel, bond_key, freshen, cov
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import (
    ChemGraphValidator, is_valence_complete, validate_prechemical,
)
from com.mhire.app.chemistry.graph_morphisms.graph_morphisms import (
    GraphMorphism, check_embedding, check_matching, identity_morphism, matching_from_matchable,
)
from com.mhire.app.common.errors import (
    InternalInvariantError, NonChemicalResultError, PreconditionError,
)
from com.mhire.app.common.violation_schema import Violation
from com.mhire.app.rewriting.reaction_category.reaction_category import Reaction, validate_reaction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReactionScheme:
    """A span left <-f- interface -g-> right of vertex embeddings."""
    left: ChemGraph
    interface: ChemGraph
    right: ChemGraph
    f: GraphMorphism
    g: GraphMorphism
    name: str = ""

    def __hash__(self):
        return hash((self.left, self.interface, self.right, self.f, self.g))


@dataclass(frozen=True)
class ReactionInstance:
    """Double pushout data: C <-f'- D -g'-> E over the scheme, with matchings m, m_hat, m_result."""
    scheme: ReactionScheme
    C: ChemGraph
    m: GraphMorphism
    D: ChemGraph
    m_hat: GraphMorphism
    f_prime: GraphMorphism
    E: ChemGraph
    m_result: GraphMorphism
    g_prime: GraphMorphism


def _sum_labels(labels: Iterable[BondLabel]) -> BondLabel:
    nonzero = [label for label in labels if label != 0]
    if not nonzero:
        return 0
    if all(label == IONIC for label in nonzero):
        return IONIC
    if any(label == IONIC for label in nonzero):
        raise PreconditionError("fibre mixes ionic and covalent bonds")
    total = sum(nonzero)
    if total > 4:
        raise PreconditionError(f"fibre bond multiplicity {total} exceeds 4")
    return total


def _require_embedding(e: GraphMorphism, role: str):
    if not check_embedding(e):
        raise PreconditionError(f"{role} is not a vertex embedding")


def _require_matching(m: GraphMorphism, role: str):
    if not check_matching(m):
        raise PreconditionError(f"{role} is not a matching")


# Pullbacks

def pullback_along_embedding(
    f: GraphMorphism, e: GraphMorphism
) -> Tuple[ChemGraph, GraphMorphism, GraphMorphism]:
    """Pullback of A -f-> B <-e- C with e an embedding; returns (Z, e*: Z -> A, f*: Z -> C)."""
    if f.cod != e.cod:
        raise PreconditionError("pullback needs a cospan")
    _require_embedding(e, "e")
    A, C = f.dom, e.dom
    e_inverse = e.inverse()
    vertices = sorted(a for a in A.vertices if f(a) in e_inverse)
    back = {a: e_inverse[f(a)] for a in vertices}

    charges: Dict[str, int] = {}
    for a in vertices:
        if A.is_chemical(a):
            if A.charge(a) == C.charge(back[a]):
                charges[a] = A.charge(a)
        elif A.charge(a) != 0 and C.charge(back[a]) != 0:
            charges[a] = A.charge(a)

    bonds: Dict[Tuple[str, str], BondLabel] = {}
    for n, a in enumerate(vertices):
        for q in vertices[n + 1:]:
            if A.is_chemical(a) and A.is_chemical(q):
                if A.bond(a, q) == C.bond(back[a], back[q]):
                    bonds[bond_key(a, q)] = A.bond(a, q)
            elif A.is_chemical(a) != A.is_chemical(q):
                alpha, chem = (q, a) if A.is_chemical(a) else (a, q)
                here, there = A.bond(alpha, chem), C.bond(back[alpha], back[chem])
                if here == IONIC and there == IONIC:
                    bonds[bond_key(a, q)] = IONIC
                elif cov(here) > 0 and cov(there) > 0:
                    bonds[bond_key(a, q)] = 1

    Z = ChemGraph({a: A.atom(a) for a in vertices}, charges, bonds, name=f"{A.name}x{C.name}")
    e_star = GraphMorphism(Z, A, {a: a for a in vertices})
    f_star = GraphMorphism(Z, C, back)
    return Z, e_star, f_star


# Pushouts

def pushout_EM(
    m: GraphMorphism, e: GraphMorphism, new_names: Optional[Mapping[str, str]] = None
) -> Tuple[ChemGraph, GraphMorphism, GraphMorphism]:
    """Pushout of B <-m- A -e-> C with m a matching and e an embedding.

    Returns (Y, e*: B -> Y, m*: C -> Y). Vertices of C outside e(A) keep their names unless
    they clash with B, or `new_names` names them.
    """
    if m.dom != e.dom:
        raise PreconditionError("pushout needs a span")
    _require_matching(m, "m")
    _require_embedding(e, "e")
    A, B, C = m.dom, m.cod, e.cod
    new_names = dict(new_names or {})

    added = sorted(C.vertices - e.image())
    taken: Set[str] = set(B.vertices)
    rename: Dict[str, str] = {}
    for c in added:
        name = new_names[c] if c in new_names else freshen(c, taken)
        if name in taken:
            raise PreconditionError(f"new vertex name {name} is already used")
        taken.add(name)
        rename[c] = name

    # em^-1(b) for b in m(A)
    em_fibre: Dict[str, List[str]] = {}
    for a in sorted(A.vertices):
        em_fibre.setdefault(m(a), []).append(e(a))
    chem_images = m.image(A.chemical_vertices())
    alpha_images = m.image(A.alpha_vertices())
    chem_source = {m(a): e(a) for a in A.chemical_vertices()}

    atoms = dict(B.atoms)
    charges = dict(B.charges)
    for b, fibre in em_fibre.items():
        charges[b] = sum(C.charge(d) for d in fibre)
    for c in added:
        atoms[rename[c]] = C.atom(c)
        charges[rename[c]] = C.charge(c)

    bonds: Dict[Tuple[str, str], BondLabel] = {}
    b_vertices = sorted(B.vertices)
    for n, b in enumerate(b_vertices):
        for p in b_vertices[n + 1:]:
            if b in chem_images and p in chem_images:
                label = C.bond(chem_source[b], chem_source[p])
            elif b in chem_images and p in alpha_images:
                label = _sum_labels(C.bond(chem_source[b], d) for d in em_fibre[p])
            elif p in chem_images and b in alpha_images:
                label = _sum_labels(C.bond(chem_source[p], d) for d in em_fibre[b])
            else:
                label = B.bond(b, p)
            if label != 0:
                bonds[bond_key(b, p)] = label
    for c in added:
        for b in chem_images:
            label = C.bond(chem_source[b], c)
            if label != 0:
                bonds[bond_key(b, rename[c])] = label
        for c2 in added:
            if c < c2 and C.bond(c, c2) != 0:
                bonds[bond_key(rename[c], rename[c2])] = C.bond(c, c2)

    Y = ChemGraph(atoms, charges, bonds, name=B.name)
    e_star = GraphMorphism(B, Y, {b: b for b in B.vertices})
    e_inverse = e.inverse()
    m_star_map = {c: m(e_inverse[c]) for c in e.image()}
    m_star_map.update(rename)
    m_star = GraphMorphism(C, Y, m_star_map)
    return Y, e_star, m_star


def pushout_complement(
    e: GraphMorphism, m: GraphMorphism
) -> Tuple[ChemGraph, GraphMorphism, GraphMorphism]:
    """Complete B -e-> A -m-> C to a pushout square; returns (Z, m_hat: B -> Z, e_hat: Z -> C)."""
    if e.cod != m.dom:
        raise PreconditionError("pushout complement needs composable maps")
    _require_embedding(e, "e")
    _require_matching(m, "m")
    B, A, C = e.dom, e.cod, m.cod

    removed_sources = A.vertices - e.image()
    # A deleted binding site may only stand for a binding site of C
    for a in sorted(A.alpha_vertices(removed_sources)):
        if C.is_chemical(m(a)):
            raise PreconditionError(f"scheme deletes binding site {a}, which is matched onto atom {m(a)}")
    removed = m.image(removed_sources)
    if len(removed) != len(removed_sources) or removed & m.image(e.image()):
        raise PreconditionError("matching identifies vertices the scheme deletes")
    vertices = C.vertices - removed

    me = {k: m(e(k)) for k in B.vertices}
    fibres: Dict[str, List[str]] = {}
    for k in sorted(B.vertices):
        fibres.setdefault(me[k], []).append(k)
    chem_images = {me[k] for k in B.chemical_vertices()}
    chem_source = {me[k]: k for k in B.chemical_vertices()}

    charges = {v: C.charge(v) for v in vertices}
    for w, fibre in fibres.items():
        charges[w] = sum(B.charge(k) for k in fibre)

    bonds: Dict[Tuple[str, str], BondLabel] = {}
    ordered = sorted(vertices)
    for n, x in enumerate(ordered):
        for y in ordered[n + 1:]:
            if x in chem_images and y in chem_images:
                label = B.bond(chem_source[x], chem_source[y])
            elif x in chem_images and y in fibres:
                label = _sum_labels(B.bond(chem_source[x], k) for k in fibres[y])
            elif y in chem_images and x in fibres:
                label = _sum_labels(B.bond(chem_source[y], k) for k in fibres[x])
            else:
                label = C.bond(x, y)
            if label != 0:
                bonds[bond_key(x, y)] = label

    Z = ChemGraph({v: C.atom(v) for v in vertices}, charges, bonds, name=f"{C.name}-complement")
    if validate_prechemical(Z):
        raise PreconditionError("pushout complement is not pre-chemical")
    m_hat = GraphMorphism(B, Z, me)
    e_hat = GraphMorphism(Z, C, {v: v for v in vertices})

    rebuilt, _, _ = pushout_EM(m_hat, e, new_names={a: m(a) for a in removed_sources})
    if rebuilt != C:
        raise PreconditionError("matching does not admit a pushout complement")
    return Z, m_hat, e_hat


# Schemes and instances

def scheme_violations(scheme: ReactionScheme) -> List[Violation]:
    violations: List[Violation] = []
    if scheme.f.dom != scheme.interface or scheme.f.cod != scheme.left:
        violations.append(Violation(clause="scheme-shape", message="left leg has the wrong type"))
    if scheme.g.dom != scheme.interface or scheme.g.cod != scheme.right:
        violations.append(Violation(clause="scheme-shape", message="right leg has the wrong type"))
    if violations:
        return violations
    for side, graph in (("left", scheme.left), ("right", scheme.right)):
        if not is_valence_complete(graph):
            violations.append(Violation(clause="scheme-valence", message=f"{side} is not valence-complete"))
    if scheme.left.net_charge() != scheme.right.net_charge():
        violations.append(Violation(clause="scheme-net-charge", message="net charges differ"))
    for role, leg in (("left", scheme.f), ("right", scheme.g)):
        try:
            if not check_embedding(leg):
                violations.append(Violation(clause="scheme-embedding", message=f"{role} leg is not an embedding"))
        except PreconditionError as e:
            violations.append(Violation(clause="scheme-embedding", message=f"{role} leg: {e.detail}"))
    if not violations and not is_terminal(scheme):
        violations.append(Violation(clause="scheme-terminal", message="interface is not the canonical maximal one"))
    return violations


def _pair_sorted(sources: List[str], targets: List[str], fixed: Mapping[str, str], count: int) -> Dict[str, str]:
    """Pair `count` sources with targets, honouring `fixed` choices first, then lexicographic order."""
    chosen: Dict[str, str] = {}
    used: Set[str] = set()
    for x in sorted(sources):
        if len(chosen) == count:
            break
        y = fixed.get(x)
        if y is not None and y in targets and y not in used:
            chosen[x] = y
            used.add(y)
    rest_sources = [x for x in sorted(sources) if x not in chosen]
    rest_targets = [y for y in sorted(targets) if y not in used]
    for x, y in zip(rest_sources, rest_targets):
        if len(chosen) == count:
            break
        chosen[x] = y
    return chosen


def _alpha_classes(g: ChemGraph, match: GraphMorphism):
    """Binding sites of the matched subset, grouped by anchor and bond kind, in domain names."""
    sites = {a for a in match.dom.alpha_vertices() if match.cod.is_alpha(match(a))}
    classes: Dict[Tuple, List[str]] = {}
    for a in sorted(sites):
        x = match(a)
        nbrs = g.neighbours(x)
        if not nbrs:
            key = ("isolated", g.charge(x))
            classes.setdefault(key, []).append(a)
            continue
        (anchor,) = tuple(nbrs)
        if g.bond(x, anchor) == IONIC:
            key = ("ionic", anchor, g.charge(x))
        else:
            key = ("covalent", anchor)
        classes.setdefault(key, []).append(a)
    return classes


def _build_interface(
    left: ChemGraph, left_match: GraphMorphism, right: ChemGraph, right_match: GraphMorphism,
    chem_map: Mapping[str, str], fixed_alpha_map: Optional[Mapping[str, str]] = None,
) -> Tuple[ChemGraph, GraphMorphism, GraphMorphism]:
    """The maximal interface between two matched subsets related by the chemical bijection `chem_map`."""
    fixed_alpha_map = fixed_alpha_map or {}
    C, E = left_match.cod, right_match.cod
    b_hat: Dict[str, str] = {}

    for u in left.chemical_vertices():
        b_hat[u] = chem_map[left_match(u)]
    right_chem_names = {right_match(v): v for v in right.chemical_vertices()}
    for u, w in list(b_hat.items()):
        if w not in right_chem_names:
            raise PreconditionError(f"{left_match(u)} is interior on one side only")
        b_hat[u] = right_chem_names[w]

    # Copies standing for non-interior chemical vertices
    left_fibres: Dict[str, List[str]] = {}
    for x in sorted(left.alpha_vertices()):
        if C.is_chemical(left_match(x)):
            left_fibres.setdefault(left_match(x), []).append(x)
    right_fibres: Dict[str, List[str]] = {}
    for y in sorted(right.alpha_vertices()):
        if E.is_chemical(right_match(y)):
            right_fibres.setdefault(right_match(y), []).append(y)
    for c, fibre in sorted(left_fibres.items()):
        targets = list(right_fibres.get(chem_map[c], []))
        if len(targets) != len(fibre):
            raise PreconditionError(f"copies of {c} and {chem_map[c]} do not correspond")
        remaining = list(fibre)
        for x in list(remaining):
            if left.charge(x) != 0:
                continue
            (n,) = tuple(left.covalent_neighbours(x)) or (None,)
            if n is None:
                continue
            for y in targets:
                if right.charge(y) == 0 and y in right.covalent_neighbours(b_hat[n]):
                    b_hat[x] = y
                    remaining.remove(x)
                    targets.remove(y)
                    break
        for x in list(remaining):
            if left.charge(x) == 0:
                continue
            image = {b_hat[n] for n in left.ionic_neighbours(x)}
            for y in targets:
                if right.charge(y) == left.charge(x) and right.ionic_neighbours(y) == image:
                    b_hat[x] = y
                    remaining.remove(x)
                    targets.remove(y)
                    break
        for x, y in zip(sorted(remaining), sorted(targets)):
            b_hat[x] = y

    # Binding sites kept by the interface
    left_classes = _alpha_classes(C, left_match)
    right_classes = _alpha_classes(E, right_match)
    for key, sites in sorted(left_classes.items(), key=lambda item: str(item[0])):
        if key[0] == "isolated":
            target_key = key
        elif key[0] == "ionic":
            target_key = ("ionic", chem_map.get(key[1]), key[2])
        else:
            target_key = ("covalent", chem_map.get(key[1]))
        targets = right_classes.get(target_key, [])
        count = min(len(sites), len(targets))
        b_hat.update(_pair_sorted(sites, targets, fixed_alpha_map, count))

    vertices = sorted(b_hat)
    charges = {}
    for k in vertices:
        if left.charge(k) == right.charge(b_hat[k]):
            charges[k] = left.charge(k)
    bonds = {}
    for n, k in enumerate(vertices):
        for t in vertices[n + 1:]:
            if left.bond(k, t) == right.bond(b_hat[k], b_hat[t]) and left.bond(k, t) != 0:
                bonds[bond_key(k, t)] = left.bond(k, t)
    K = ChemGraph({k: left.atom(k) for k in vertices}, charges, bonds, name="K")
    f = GraphMorphism(K, left, {k: k for k in vertices})
    g = GraphMorphism(K, right, b_hat)
    return K, f, g


def canonical_scheme(
    left: ChemGraph, right: ChemGraph, chem_map: Mapping[str, str],
    alpha_map: Optional[Mapping[str, str]] = None, name: str = "",
) -> ReactionScheme:
    """The scheme with the maximal interface relating `left` to `right` along `chem_map`."""
    if not is_valence_complete(left) or not is_valence_complete(right):
        raise PreconditionError("scheme sides must be valence-complete")
    if left.net_charge() != right.net_charge():
        raise PreconditionError("scheme sides must have equal net charge")
    if set(chem_map) != set(left.chemical_vertices()) or set(chem_map.values()) != set(right.chemical_vertices()):
        raise PreconditionError("scheme chemical map must be a bijection of chemical vertices")
    K, f, g = _build_interface(
        left, identity_morphism(left), right, identity_morphism(right), chem_map, alpha_map)
    return ReactionScheme(left, K, right, f, g, name=name)


def is_terminal(scheme: ReactionScheme) -> bool:
    """Compare the interface, read in left-hand names, against the canonical one."""
    through = {scheme.f(k): scheme.g(k) for k in scheme.interface.vertices}
    chem_map = {a: through[a] for a in scheme.left.chemical_vertices() if a in through}
    alpha_map = {a: through[a] for a in scheme.left.alpha_vertices() if a in through}
    try:
        canonical = canonical_scheme(scheme.left, scheme.right, chem_map, alpha_map)
    except PreconditionError:
        return False
    named = scheme.interface.relabel(scheme.f.mapping)
    logger.debug(f"Terminality check over {len(through)} interface vertices")
    return canonical.interface == named and canonical.g.mapping == through


def apply_scheme(scheme: ReactionScheme, m: GraphMorphism) -> ReactionInstance:
    if m.dom != scheme.left:
        raise PreconditionError("matching domain is not the scheme's left side")
    validator = ChemGraphValidator()
    if validator.chemical_violations(m.cod):
        raise PreconditionError("scheme must be applied to a chemical graph")
    _require_matching(m, "m")
    D, m_hat, f_prime = pushout_complement(scheme.f, m)
    E, g_prime, m_result = pushout_EM(m_hat, scheme.g)
    problems = validator.chemical_violations(E)
    if problems:
        raise NonChemicalResultError(
            f"scheme {scheme.name or ''} produced a non-chemical graph: {problems[0]}".replace("  ", " "))
    logger.info(f"Applied scheme {scheme.name or '(unnamed)'}: {len(m.cod)} -> {len(E)} vertices")
    return ReactionInstance(scheme, m.cod, m, D, m_hat, f_prime, E, m_result, g_prime)


def instance_to_tuple(inst: ReactionInstance) -> Reaction:
    back = inst.f_prime.inverse()
    through = {c: inst.g_prime(d) for c, d in back.items()}
    U_C = inst.m.image()
    U_E = inst.m_result.image()
    chem_map = {c: through[c] for c in inst.C.chemical_vertices(U_C)}
    rest_map = {c: through[c] for c in inst.C.vertices - U_C}
    reaction = Reaction(inst.C, inst.E, U_C, U_E, chem_map, rest_map)
    problems = validate_reaction(reaction)
    if problems:
        raise InternalInvariantError(f"reaction instance yields an invalid reaction: {problems[0]}")
    return reaction


def tuple_to_instance(r: Reaction) -> ReactionInstance:
    problems = validate_reaction(r)
    if problems:
        raise PreconditionError(f"invalid reaction: {problems[0]}")
    C, E = r.dom, r.cod
    left, m = matching_from_matchable(C, r.changed_dom)
    right, m_right = matching_from_matchable(E, r.changed_cod)
    K, f, g = _build_interface(left, m, right, m_right, r.chem_map)
    scheme = ReactionScheme(left, K, right, f, g)

    D, m_hat, f_prime = pushout_complement(f, m)
    relabel: Dict[str, str] = {}
    for k in K.vertices:
        relabel[m_hat(k)] = m_right(g(k))
    for d in D.vertices:
        if d not in relabel:
            relabel[d] = r.rest_map[d]
    D_named = D.relabel(relabel)
    m_hat_named = GraphMorphism(K, D_named, {k: relabel[m_hat(k)] for k in K.vertices})
    f_prime_named = GraphMorphism(D_named, C, {relabel[d]: d for d in D.vertices})

    new_names = {y: m_right(y) for y in right.vertices - g.image()}
    rebuilt, g_prime, m_result = pushout_EM(m_hat_named, g, new_names=new_names)
    if rebuilt != E:
        raise PreconditionError("reaction is not realised by a double pushout over its matched subsets")
    return ReactionInstance(scheme, C, m, D_named, m_hat_named, f_prime_named, E, m_result, g_prime)
