import itertools
import logging
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from com.mhire.app.chemistry.chem_graph.chem_graph import IONIC, ChemGraph, bond_key, freshen
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import validate_chemical
from com.mhire.app.chemistry.graph_morphisms.graph_morphisms import (
    GraphMorphism, check_matching, compose_morphisms, identity_morphism,
)
from com.mhire.app.common.errors import (
    ConfigurationError, DomainError, InternalInvariantError, NonChemicalResultError, PreconditionError,
    SearchError, TermTypeError,
)
from com.mhire.app.common.violation_schema import Violation
from com.mhire.app.config.config import Config
from com.mhire.app.rewriting.dpo_engine.dpo_engine import ReactionScheme, apply_scheme, instance_to_tuple
from com.mhire.app.rewriting.reaction_category.reaction_category import (
    Reaction, compose, identity, parallel, validate_reaction,
)
from com.mhire.app.services.chirality.chirality import label_embeddings, label_isomorphisms
from com.mhire.app.services.disconnection_engine.disconnection_engine import Term, eval_term
from com.mhire.app.utils.fingerprint_utility.fingerprint import LookupOracle, fingerprint

logger = logging.getLogger(__name__)

EMPTY = ChemGraph({})


def chemical_violations(g: ChemGraph, role: str) -> List[Violation]:
    return [
        Violation(clause=f"{role}-chemical", vertices=v.vertices, message=v.message)
        for v in validate_chemical(g)
    ]


def molecular_violations(g: ChemGraph, role: str) -> List[Violation]:
    violations = chemical_violations(g, role)
    alphas = sorted(g.alpha_vertices())
    if alphas:
        violations.append(Violation(
            clause=f"{role}-molecular", vertices=alphas, message=f"{role} has binding sites"))
    return violations


def _rest_of(whole: ChemGraph, part: ChemGraph) -> Optional[ChemGraph]:
    """The graph R with whole = part + R by vertex names, if there is one."""
    if not part.vertices <= whole.vertices or whole.restrict(part.vertices) != part:
        return None
    rest = whole.vertices - part.vertices
    if any(whole.neighbours(v) & rest for v in part.vertices):
        return None
    return whole.restrict(rest)


# Environments

@dataclass(frozen=True)
class Environment:
    """Molecular entities available in unbounded supply, in a fixed order."""
    molecules: Tuple[ChemGraph, ...] = ()

    def __len__(self) -> int:
        return len(self.molecules)

    def zero(self) -> Tuple[int, ...]:
        return (0,) * len(self.molecules)

    def violations(self) -> List[Violation]:
        violations: List[Violation] = []
        for i, M in enumerate(self.molecules, start=1):
            violations.extend(molecular_violations(M, f"environment-{i}"))
            if len(M.connected_components()) != 1:
                violations.append(Violation(
                    clause=f"environment-{i}-connected", vertices=sorted(M.vertices),
                    message="environment molecule is not connected"))
        return violations

    def summand(self, multiplicity: Sequence[int], taken: Set[str] = frozenset()) -> ChemGraph:
        """n1 M1 + ... + nk Mk, copy j of molecule i naming its vertex v as `<v>_<i>_<j>`."""
        if len(multiplicity) != len(self.molecules):
            raise DomainError(f"multiplicity {tuple(multiplicity)} does not fit {len(self)} molecules")
        used = set(taken)
        result = EMPTY
        for i, (M, n) in enumerate(zip(self.molecules, multiplicity), start=1):
            if n < 0:
                raise DomainError("multiplicities must be non-negative")
            for j in range(1, n + 1):
                names = {}
                for v in sorted(M.vertices):
                    names[v] = freshen(f"{v}_{i}_{j}", used)
                    used.add(names[v])
                result = result.disjoint_union(M.relabel(names))
        return result


def _add(n: Sequence[int], m: Sequence[int]) -> Tuple[int, ...]:
    if len(n) != len(m):
        raise PreconditionError("multiplicity vectors have different lengths")
    return tuple(a + b for a, b in zip(n, m))


# Morphisms parameterised by an environment

@dataclass(frozen=True)
class MatchMorphism:
    """A matching A -> B with an atom-preserving injection of environment copies covering the rest of B."""
    matching: GraphMorphism
    injection: Mapping[str, str]
    summand: ChemGraph
    multiplicity: Tuple[int, ...]

    @property
    def dom(self) -> ChemGraph:
        return self.matching.dom

    @property
    def cod(self) -> ChemGraph:
        return self.matching.cod


@dataclass(frozen=True)
class ReactMorphism:
    """A reaction summand + payload -> cod, read as a morphism payload -> cod."""
    reaction: Reaction
    payload: ChemGraph
    summand: ChemGraph
    multiplicity: Tuple[int, ...]

    @property
    def dom(self) -> ChemGraph:
        return self.payload

    @property
    def cod(self) -> ChemGraph:
        return self.reaction.cod


@dataclass(frozen=True)
class DiscMorphism:
    """A disconnection term on summand + payload, read as a morphism out of payload."""
    term: Term
    payload: ChemGraph
    summand: ChemGraph
    multiplicity: Tuple[int, ...]

    @property
    def dom(self) -> ChemGraph:
        return self.payload

    @property
    def cod(self) -> ChemGraph:
        return eval_term(self.term, self.summand.disjoint_union(self.payload))


ParaMorphism = Union[MatchMorphism, ReactMorphism, DiscMorphism]


def match_violations(x: MatchMorphism) -> List[Violation]:
    violations: List[Violation] = []
    B = x.cod
    r = dict(x.injection)
    if set(r) != x.summand.vertices:
        violations.append(Violation(
            clause="injection-domain", vertices=sorted(set(r) ^ x.summand.vertices),
            message="injection is not defined on exactly the environment copies"))
        return violations
    if len(set(r.values())) != len(r):
        violations.append(Violation(
            clause="injection-injective", vertices=sorted(r), message="environment injection is not injective"))
    for v, w in sorted(r.items()):
        if w not in B or B.atom(w) != x.summand.atom(v):
            violations.append(Violation(
                clause="injection-atoms", vertices=[v, w], message="injection does not preserve the atom"))
    try:
        if not check_matching(x.matching):
            violations.append(Violation(clause="matching", vertices=[], message="underlying map is not a matching"))
    except PreconditionError as e:
        violations.append(Violation(clause="matching", vertices=[], message=e.detail))
    image_m = x.matching.image()
    image_r = frozenset(r.values())
    if image_m | image_r != B.vertices:
        violations.append(Violation(
            clause="match-cover", vertices=sorted(B.vertices - image_m - image_r),
            message="matching and environment do not cover the codomain"))
    sites = x.matching.image(x.dom.alpha_vertices())
    if image_m & image_r != sites:
        violations.append(Violation(
            clause="match-overlap", vertices=sorted((image_m & image_r) ^ sites),
            message="matching meets the environment outside the images of binding sites"))
    return violations


def react_violations(x: ReactMorphism) -> List[Violation]:
    if _rest_of(x.reaction.dom, x.payload) != x.summand:
        return [Violation(clause="react-domain", vertices=[], message="reaction domain is not summand + payload")]
    return validate_reaction(x.reaction)


def disc_violations(x: DiscMorphism) -> List[Violation]:
    try:
        x.cod
    except TermTypeError as e:
        return [Violation(clause="disc-typing", vertices=[], message=e.detail)]
    except DomainError as e:
        return [Violation(clause="disc-domain", vertices=[], message=e.detail)]
    return []


def para_identity(variant: type, A: ChemGraph, k: int = 0) -> ParaMorphism:
    zero = (0,) * k
    if variant is MatchMorphism:
        return MatchMorphism(identity_morphism(A), {}, EMPTY, zero)
    if variant is ReactMorphism:
        return ReactMorphism(identity(A), A, EMPTY, zero)
    if variant is DiscMorphism:
        return DiscMorphism(Term(), A, EMPTY, zero)
    raise DomainError(f"unknown morphism variant {variant.__name__}")


def _joined(first: ChemGraph, second: ChemGraph) -> ChemGraph:
    try:
        return first.disjoint_union(second)
    except DomainError as e:
        raise PreconditionError(f"environment copies share names: {e.detail}")


def para_compose(x: ParaMorphism, y: ParaMorphism) -> ParaMorphism:
    """Diagrammatic composite x;y of two morphisms of the same kind."""
    if type(x) is not type(y):
        raise PreconditionError(f"cannot compose {type(x).__name__} with {type(y).__name__}")
    n = _add(x.multiplicity, y.multiplicity)

    if isinstance(x, MatchMorphism):
        matching = compose_morphisms(x.matching, y.matching)
        taken = set(x.summand.vertices)
        moved: Dict[str, str] = {}
        for v in sorted(y.summand.vertices):
            moved[v] = freshen(v, taken)
            taken.add(moved[v])
        injection = {v: y.matching(w) for v, w in x.injection.items()}
        injection.update({moved[v]: w for v, w in y.injection.items()})
        composite = MatchMorphism(matching, injection, x.summand.disjoint_union(y.summand.relabel(moved)), n)
        problems = match_violations(composite)
        if problems:
            raise PreconditionError(f"composite is not a matching with environment: {problems[0].message}")
        return composite

    if x.cod != y.dom:
        raise PreconditionError("morphisms are not composable")
    summand = _joined(x.summand, y.summand)
    if isinstance(x, ReactMorphism):
        widened = parallel(x.reaction, identity(y.summand))
        return ReactMorphism(compose(widened, y.reaction), x.payload, summand, n)
    return DiscMorphism(x.term.then(y.term), x.payload, summand, n)


def embed_match(x: MatchMorphism) -> ReactMorphism:
    """The reaction summand + A -> B that keeps every chemical vertex of A away from binding sites."""
    A, B, m = x.dom, x.cod, x.matching
    kept = {u for u in A.chemical_vertices() if not A.alpha_vertices(A.neighbours(u))}
    dom = _joined(x.summand, A)
    chem_map = {u: m(u) for u in A.chemical_vertices() - kept}
    chem_map.update(x.injection)
    reaction = Reaction(
        dom, B,
        dom.vertices - kept, B.vertices - {m(u) for u in kept},
        chem_map, {u: m(u) for u in kept},
    )
    problems = validate_reaction(reaction)
    if problems:
        raise PreconditionError(f"matching does not embed as a reaction: {problems[0].message}")
    return ReactMorphism(reaction, A, x.summand, x.multiplicity)


# Steps and sequences

@dataclass(frozen=True)
class RetroStep:
    target: ChemGraph
    byproduct: ChemGraph
    environment: Environment
    synthons: ChemGraph
    equivalents: ChemGraph
    disconnection: Term
    matching: MatchMorphism
    reaction: ReactMorphism

    @property
    def key(self) -> str:
        return f"{fingerprint(self.equivalents)}:{fingerprint(self.byproduct)}:{self.disconnection}"


def validate_step(step: RetroStep) -> List[Violation]:
    violations: List[Violation] = []
    violations += chemical_violations(step.target, "target")
    violations += molecular_violations(step.byproduct, "byproduct")
    violations += molecular_violations(step.equivalents, "equivalents")
    violations += step.environment.violations()

    try:
        if eval_term(step.disconnection, step.target) != step.synthons:
            violations.append(Violation(
                clause="disconnection-type", vertices=[], message="disconnection does not reach the synthons"))
    except TermTypeError as e:
        violations.append(Violation(clause="disconnection-type", vertices=[], message=e.detail))

    k = len(step.environment)
    for role, x in (("matching", step.matching), ("reaction", step.reaction)):
        if len(x.multiplicity) != k:
            violations.append(Violation(
                clause=f"{role}-multiplicity", vertices=[], message=f"expected {k} multiplicities"))
    if step.matching.dom != step.synthons or step.matching.cod != step.equivalents:
        violations.append(Violation(
            clause="matching-type", vertices=[], message="matching does not run from synthons to equivalents"))
    violations += match_violations(step.matching)

    if step.reaction.payload != step.equivalents:
        violations.append(Violation(
            clause="reaction-type", vertices=[], message="reaction does not start at the equivalents"))
    if _rest_of(step.reaction.cod, step.target) != step.byproduct:
        violations.append(Violation(
            clause="reaction-type", vertices=[], message="reaction does not end at target + byproduct"))
    violations += react_violations(step.reaction)
    return violations


@dataclass(frozen=True)
class RetroSequence:
    """Reactions r1..rn, each producing the reactants of the one before, the first producing the target."""
    target: ChemGraph
    links: Tuple[Tuple[Environment, ReactMorphism], ...] = ()


def validate_sequence(q: RetroSequence) -> List[Violation]:
    violations: List[Violation] = []
    expected = q.target
    for n, (environment, r) in enumerate(q.links, start=1):
        violations += environment.violations()
        violations += [
            Violation(clause=f"link-{n}-{v.clause}", vertices=v.vertices, message=v.message)
            for v in react_violations(r)
        ]
        rest = _rest_of(r.cod, expected)
        if rest is None:
            violations.append(Violation(
                clause="sequence-chain", vertices=sorted(expected.vertices),
                message=f"codomain of reaction {n} does not contain its successor's reactants as a summand"))
        elif rest.alpha_vertices():
            violations.append(Violation(
                clause="sequence-byproduct", vertices=sorted(rest.alpha_vertices()),
                message=f"byproduct of reaction {n} has binding sites"))
        expected = r.payload
    return violations


# Search

@dataclass(frozen=True)
class SearchBounds:
    max_term_length: int
    max_multiplicity: int
    max_candidates: int
    timeout_seconds: float

    KEYS = {
        "term_length": "max_term_length",
        "multiplicity": "max_multiplicity",
        "candidates": "max_candidates",
        "timeout": "timeout_seconds",
    }

    @classmethod
    def from_config(cls) -> "SearchBounds":
        config = Config()
        return cls(
            config.search_max_term_length, config.search_max_multiplicity,
            config.search_max_candidates, config.search_timeout_seconds,
        )

    def with_overrides(self, text: Optional[str]) -> "SearchBounds":
        """Apply `key=value,...` overrides such as `term_length=4,multiplicity=2`."""
        if not text:
            return self
        changes = {}
        for item in text.split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in self.KEYS:
                raise ConfigurationError(f"bad bound {item!r}; known bounds: {', '.join(self.KEYS)}")
            try:
                number = int(value)
            except ValueError:
                raise ConfigurationError(f"bound {key} must be an integer, got {value!r}")
            if number < 0:
                raise ConfigurationError(f"bound {key} must be non-negative")
            changes[self.KEYS[key]] = number
        return replace(self, **changes)


@dataclass
class SearchResult:
    steps: List[RetroStep] = field(default_factory=list)
    truncated: bool = False
    reason: str = ""


class _Budget:
    def __init__(self, seconds: float):
        self.deadline = time.monotonic() + seconds

    def expired(self) -> bool:
        return time.monotonic() > self.deadline


def _multiplicities(environment: Environment, bound: int) -> Iterator[Tuple[int, ...]]:
    return itertools.product(range(bound + 1), repeat=len(environment))


def _glued(S: ChemGraph, summand: ChemGraph, assignment: Dict[str, str]) -> Iterator[ChemGraph]:
    """Graphs on chem(S) + summand with each binding site of S replaced by its assigned environment atom."""
    chem = S.chemical_vertices()
    atoms = {v: S.atom(v) for v in chem}
    atoms.update(summand.atoms)
    charges = {v: S.charge(v) for v in chem}
    hit: Dict[str, List[str]] = {}
    for a, x in assignment.items():
        hit.setdefault(x, []).append(a)
    for v in summand.vertices:
        charges[v] = sum(S.charge(a) for a in hit[v]) if v in hit else summand.charge(v)

    bonds = {k: label for k, label in S.bonds.items() if k[0] in chem and k[1] in chem}
    for a, x in sorted(assignment.items()):
        for u in S.neighbours(a):
            key = bond_key(u, x)
            label = S.bond(u, a)
            if label == IONIC:
                if bonds.get(key, 0) not in (0, IONIC):
                    return
                bonds[key] = IONIC
            else:
                if bonds.get(key, 0) == IONIC or bonds.get(key, 0) >= 4:
                    return
                bonds[key] = bonds.get(key, 0) + 1

    fixed = {k: label for k, label in summand.bonds.items() if k[0] not in hit and k[1] not in hit}
    loose = sorted(k for k in summand.bonds if k not in fixed)
    options = [
        (IONIC, 0) if summand.bonds[k] == IONIC else tuple(range(summand.bonds[k], -1, -1))
        for k in loose
    ]
    for choice in itertools.product(*options):
        glued = dict(bonds)
        glued.update(fixed)
        glued.update(zip(loose, choice))
        E = ChemGraph(atoms, charges, glued, name="equivalents")
        if not molecular_violations(E, "equivalents"):
            yield E


def _equivalents(S: ChemGraph, environment: Environment, bounds: SearchBounds,
                 budget: _Budget) -> Iterator[MatchMorphism]:
    """Matchings from the synthons into molecular graphs built from them and environment copies."""
    alphas = sorted(S.alpha_vertices())
    chem = S.chemical_vertices()
    for n in _multiplicities(environment, bounds.max_multiplicity):
        summand = environment.summand(n, taken=set(S.vertices))
        hosts = sorted(summand.chemical_vertices())
        for images in itertools.product(hosts, repeat=len(alphas)):
            assignment = dict(zip(alphas, images))
            for E in _glued(S, summand, assignment):
                if budget.expired():
                    return
                mapping = {u: u for u in chem}
                mapping.update(assignment)
                x = MatchMorphism(GraphMorphism(S, E, mapping), {v: v for v in summand.vertices}, summand, n)
                if not match_violations(x):
                    logger.debug(f"Synthetic equivalent with {len(E)} vertices from multiplicities {n}")
                    yield x


def scheme_matchings(L: ChemGraph, host: ChemGraph) -> Iterator[GraphMorphism]:
    """Matchings of a scheme's left side into `host`, extending label embeddings of its chemical part."""
    chem = L.chemical_vertices()
    alphas = sorted(L.alpha_vertices())
    for core in label_embeddings(L.restrict(chem), host, charges=False):
        options = []
        for a in alphas:
            anchors = L.neighbours(a)
            if anchors:
                options.append(sorted(set().union(*(host.neighbours(core[u]) for u in anchors))))
            else:
                options.append(sorted(host.vertices))
        for images in itertools.product(*options):
            mapping = dict(core)
            mapping.update(zip(alphas, images))
            try:
                m = GraphMorphism(L, host, mapping)
                if check_matching(m):
                    yield m
            except (DomainError, PreconditionError):
                continue


def _split_products(P: ChemGraph, target: ChemGraph) -> Iterator[Tuple[ChemGraph, Reaction]]:
    """Ways of reading P as target + byproduct, with the renaming reaction P -> target + byproduct."""
    components = P.connected_components()
    k = len(target.connected_components())
    for chosen in itertools.combinations(range(len(components)), k):
        part = frozenset().union(*(components[i] for i in chosen))
        rest = P.vertices - part
        if P.alpha_vertices(rest):
            continue
        f = next(label_isomorphisms(target, P.restrict(part)), None)
        if f is None:
            continue
        mapping = {w: v for v, w in f.items()}
        taken = set(target.vertices)
        for v in sorted(rest):
            mapping[v] = freshen(v, taken)
            taken.add(mapping[v])
        Q = P.relabel(mapping)
        B = Q.restrict({mapping[v] for v in rest})
        yield ChemGraph(B.atoms, B.charges, B.bonds, name="byproduct"), Reaction(P, Q, frozenset(), frozenset(), {}, mapping)


def _maximal_reaction(A: ChemGraph, B: ChemGraph) -> Optional[Reaction]:
    """The reaction changing everything, pairing equal names first and then atoms in name order."""
    chem_A, chem_B = A.chemical_vertices(), B.chemical_vertices()
    if Counter(A.atom(v) for v in chem_A) != Counter(B.atom(v) for v in chem_B):
        return None
    chem_map = {v: v for v in chem_A & chem_B if A.atom(v) == B.atom(v)}
    left = sorted(chem_A - set(chem_map), key=lambda v: (A.atom(v), v))
    right = sorted(chem_B - set(chem_map.values()), key=lambda v: (B.atom(v), v))
    chem_map.update(zip(left, right))
    reaction = Reaction(A, B, A.vertices, B.vertices, chem_map, {})
    return None if validate_reaction(reaction) else reaction


def _reactions(target: ChemGraph, E: ChemGraph, schemes: Sequence[ReactionScheme],
               oracle: Optional[LookupOracle], environment: Environment, bounds: SearchBounds,
               budget: _Budget) -> Iterator[Tuple[ChemGraph, ReactMorphism]]:
    zero = environment.zero()
    for scheme in schemes:
        for m in scheme_matchings(scheme.left, E):
            if budget.expired():
                return
            try:
                reaction = instance_to_tuple(apply_scheme(scheme, m))
            except (PreconditionError, NonChemicalResultError) as e:
                logger.debug(f"Scheme {scheme.name or '(unnamed)'} does not apply here: {e.detail}")
                continue
            for B, renaming in _split_products(reaction.cod, target):
                yield B, ReactMorphism(compose(reaction, renaming), E, EMPTY, zero)

    if oracle is None or not oracle(E):
        return
    for n in _multiplicities(environment, bounds.max_multiplicity):
        B = environment.summand(n, taken=set(target.vertices))
        products = target.disjoint_union(B)
        if not oracle.predicts(E, products):
            continue
        reaction = _maximal_reaction(E, products)
        if reaction is not None:
            yield ChemGraph(B.atoms, B.charges, B.bonds, name="byproduct"), ReactMorphism(reaction, E, EMPTY, zero)


def search_step(target: ChemGraph, rules: Sequence[Term], schemes: Sequence[ReactionScheme] = (),
                oracle: Optional[LookupOracle] = None, environment: Environment = Environment(),
                bounds: Optional[SearchBounds] = None) -> SearchResult:
    """Retrosynthetic steps for `target` whose disconnection is one of `rules`."""
    if not rules:
        raise SearchError("no disconnection terms to search with")
    if not schemes and oracle is None:
        raise SearchError("search needs reaction schemes or a lookup oracle")
    problems = chemical_violations(target, "target") + environment.violations()
    if problems:
        raise PreconditionError(f"{problems[0].clause}: {problems[0].message}")
    bounds = bounds or SearchBounds.from_config()
    budget = _Budget(bounds.timeout_seconds)
    schemes = sorted(schemes, key=lambda s: s.name)
    result = SearchResult()
    found: Dict[str, RetroStep] = {}
    logger.info(f"Searching steps for {target.describe()} with {len(rules)} disconnections")

    for d in sorted(rules, key=str):
        if len(d) > bounds.max_term_length:
            logger.debug(f"Skipping {d}: longer than {bounds.max_term_length}")
            continue
        try:
            S = eval_term(d, target)
        except TermTypeError as e:
            logger.debug(f"Skipping {d}: {e.detail}")
            continue
        for x in _equivalents(S, environment, bounds, budget):
            for B, r in _reactions(target, x.cod, schemes, oracle, environment, bounds, budget):
                step = RetroStep(target, B, environment, S, x.cod, d, x, r)
                if step.key in found:
                    continue
                problems = validate_step(step)
                if problems:
                    raise InternalInvariantError(f"search built an invalid step: {problems[0].message}")
                found[step.key] = step
                if len(found) >= bounds.max_candidates:
                    result.truncated, result.reason = True, f"candidate bound {bounds.max_candidates}"
                    break
            if result.truncated:
                break
        if result.truncated:
            break
    if budget.expired() and not result.truncated:
        result.truncated, result.reason = True, f"timeout after {bounds.timeout_seconds}s"
    if result.truncated:
        logger.warning(f"Step search truncated: {result.reason}")

    result.steps = [found[k] for k in sorted(found)]
    logger.info(f"Found {len(result.steps)} retrosynthetic steps")
    return result
