import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple, Union

from com.mhire.app.chemistry.chem_graph.chem_graph import IONIC, ChemGraph, cov as cov_label, freshen
from com.mhire.app.chemistry.chem_graph.valence_table import ALPHA
from com.mhire.app.common.errors import DomainError, TermTypeError
from com.mhire.app.services.disconnection_engine.disconnection_engine import (
    Generator, Kind, Term, Undefined, apply_generator, cov, e_neg, e_pos, eval_term, ion, is_well_typed, rename,
    touch,
)
from com.mhire.app.services.react_bridge.react_bridge import translate
from com.mhire.app.utils.format_utility.term_format import parse_term

logger = logging.getLogger(__name__)

# Relations between the two sides of an equation
APPROX = "approx"      # equal whenever both sides are well-typed
LESSSIM = "lesssim"    # and a well-typed left side makes the right side well-typed
SIMEQ = "simeq"        # and the converse


@dataclass(frozen=True)
class Axiom:
    name: str
    relation: str
    lhs: str
    rhs: str


AXIOMS: Tuple[Axiom, ...] = (
    # Renames and touches
    Axiom("trans", LESSSIM, "R(p>z);R(z>w)", "R(p>w)"),
    Axiom("rcomm", APPROX, "R(p>x);R(q>t)", "R(q>t);R(p>x)"),
    Axiom("refl", LESSSIM, "R(p>p)", "S(p)"),
    Axiom("rsymm", APPROX, "R(q>z);R(p>q)", "S(q);R(p>z)"),
    Axiom("sr1", APPROX, "R(p>x);S(o)", "S(o);R(p>x)"),
    Axiom("sr2", SIMEQ, "R(p>x);S(x)", "S(p);R(p>x)"),
    Axiom("sr2-absorb", SIMEQ, "R(p>x);S(x)", "R(p>x)"),

    # Renames against rules
    Axiom("rd1", APPROX, "R(p>x);C(h1,h2|a,b)", "C(h1,h2|a,b);R(p>x)"),
    Axiom("rd2", SIMEQ, "R(p>x);E(o,x)", "E(o,p);R(p>x)"),
    Axiom("rd3", SIMEQ, "C(h1,h2|a,b);R(a>x)", "C(h1,h2|x,b)"),
    Axiom("rd4", LESSSIM, "C(h1,h2|i,j);~E(o|p,e);R(i>p);R(j>e)", "~E(o|p,e);C(h1,h2|p,e)"),

    # A rule against its connection
    Axiom("ddbar1", APPROX, "E(m|a,b);~E(m|s,e)", "S(m);R(s>a);R(e>b)"),
    Axiom("ddbar2", APPROX, "E(m|a,b);~E(m|s,b)", "S(m);R(s>a)"),
    Axiom("ddbar3", APPROX, "E(m|a,b);~E(m|a,e)", "S(m);R(e>b)"),
    Axiom("ddbar4", LESSSIM, "C(h1,h2|a,b);~C(h1,h2|a,b)", "S(h1);S(h2)"),
    Axiom("ddbar4-2", LESSSIM, "~I(na,cl);I(na,cl)", "S(na);S(cl)"),
    Axiom("eebar", APPROX, "E(o,p);~E(o,e)", "S(o);R(p>z);R(e>p);R(z>e)"),
    Axiom("comm2", APPROX, "~I(na,cl);E(o,p)", "E(o,p);~I(na,cl)"),

    # Touches against rules
    Axiom("scomm", SIMEQ, "S(o);S(p)", "S(p);S(o)"),
    Axiom("sidem", SIMEQ, "S(o);S(o)", "S(o)"),
    Axiom("sd1", LESSSIM, "S(o);C(h1,h2|a,b)", "C(h1,h2|a,b);S(o)"),
    Axiom("sd2", SIMEQ, "C(h1,h2|a,b);S(h1)", "C(h1,h2|a,b)"),
    Axiom("cs", SIMEQ, "C(h1,h2|a,b)", "C(h2,h1|b,a)"),

    # Rules on disjoint vertices
    Axiom("comm1", SIMEQ, "C(h1,h2|a,b);E(m|c,d)", "E(m|c,d);C(h1,h2|a,b)"),
    Axiom("comm3", SIMEQ, "C(h1,h2|a,b);I(n1,c1)", "I(n1,c1);C(h1,h2|a,b)"),
    Axiom("comm4", LESSSIM, "E(m|a,b);I(n1,c1)", "I(n1,c1);E(m|a,b)"),
    Axiom("comm5", LESSSIM, "E(o,p);I(n1,c1)", "I(n1,c1);E(o,p)"),
    Axiom("comm6", LESSSIM, "~E(na,e);I(n1,c1)", "I(n1,c1);~E(na,e)"),
    Axiom("comm7", LESSSIM, "~E(m|s,e);I(n1,c1)", "I(n1,c1);~E(m|s,e)"),
    Axiom("comm8", LESSSIM, "~C(o,m|p,s);I(n1,c1)", "I(n1,c1);~C(o,m|p,s)"),
    Axiom("comm9", SIMEQ, "E(m|a,b);C(h1,h2|c,d)", "C(h1,h2|c,d);E(m|a,b)"),
    Axiom("comm10", LESSSIM, "E(o,p);C(h1,h2|c,d)", "C(h1,h2|c,d);E(o,p)"),
    Axiom("comm11", SIMEQ, "~E(na,e);C(h1,h2|c,d)", "C(h1,h2|c,d);~E(na,e)"),
    Axiom("comm12", LESSSIM, "E(o,p);E(m|c,d)", "E(m|c,d);E(o,p)"),
    Axiom("comm13", SIMEQ, "~E(na,e);E(m|c,d)", "E(m|c,d);~E(na,e)"),

    # Derived identities
    Axiom("s-absorb", SIMEQ, "C(h1,h2|a,b);S(a)", "C(h1,h2|a,b)"),
    Axiom("ids0", APPROX, "~C(o,m|p,s);C(o,m|c,d)", "S(o);S(m);R(p>j);R(s>d);R(j>c)"),
    Axiom("ids1", APPROX, "R(s>c);R(e>d);E(m|a,b)", "R(s>a);R(e>b);E(m|c,d)"),
    Axiom("ids2", APPROX, "R(s>c);E(m|a,b)", "R(s>a);E(m|c,b)"),
    Axiom("ids3", APPROX, "R(e>d);E(m|a,b)", "R(e>b);E(m|a,d)"),
    Axiom("ddindex", SIMEQ, "C(d1,d2|a,b);C(d1,d2|c,d)", "C(d1,d2|a,d);C(d1,d2|c,b)"),
)


def axiom(name: str) -> Axiom:
    for ax in AXIOMS:
        if ax.name == name:
            return ax
    raise DomainError(f"unknown axiom {name!r}")


def workbench() -> ChemGraph:
    """One chemical graph on which every left-hand side of the catalogue is well-typed."""
    atoms = {
        "h1": "H", "h2": "H",                       # H2
        "o": "O", "p": ALPHA, "q": ALPHA,           # oxygen with two binding sites
        "m": "O", "s": ALPHA,                       # negative oxygen with one site
        "e": ALPHA,                                 # free electron
        "n1": "Na", "c1": "Cl",                     # sodium chloride
        "na": "Na", "cl": "Cl",                     # separated ions
        "d1": "O", "d2": "O",                       # O2
    }
    charges = {"m": -1, "e": -1, "n1": 1, "c1": -1, "na": 1, "cl": -1}
    bonds = {
        ("h1", "h2"): 1, ("o", "p"): 1, ("o", "q"): 1, ("m", "s"): 1,
        ("c1", "n1"): IONIC, ("d1", "d2"): 2,
    }
    return ChemGraph(atoms, charges, bonds, name="workbench")


def instantiate(ax: Axiom, rng: Optional[random.Random] = None,
                padding: Optional[ChemGraph] = None) -> Tuple[ChemGraph, Term, Term]:
    """The axiom on the workbench, optionally under a random renaming and beside `padding`."""
    g = workbench()
    lhs, rhs = parse_term(ax.lhs), parse_term(ax.rhs)
    if rng is not None:
        names = sorted(g.vertices | lhs.names() | rhs.names())
        if padding is not None:
            names += sorted(padding.vertices)
        targets = [f"v{k}" for k in range(len(names))]
        rng.shuffle(targets)
        mapping: Dict[str, str] = dict(zip(names, targets))
        g = g.relabel({v: mapping[v] for v in g.vertices})
        lhs, rhs = lhs.renamed(mapping), rhs.renamed(mapping)
        if padding is not None:
            padding = padding.relabel({v: mapping[v] for v in padding.vertices})
    if padding is not None:
        g = g.disjoint_union(padding)
    return g, lhs, rhs


def axiom_violations(ax: Union[Axiom, "Schema"], g: ChemGraph, lhs: Term, rhs: Term) -> List[str]:
    """How an instance fails to hold under translation; empty when it holds."""
    try:
        eval_term(lhs, g)
    except TermTypeError as e:
        return [f"{ax.name}: left side ill-typed: {e.detail}"]
    try:
        eval_term(rhs, g)
    except TermTypeError as e:
        if ax.relation == APPROX:
            return []
        return [f"{ax.name}: right side ill-typed: {e.detail}"]
    if translate(lhs, g) != translate(rhs, g):
        return [f"{ax.name}: sides translate to different reactions"]
    return []


# Generators that may apply to a graph

_LABELS = {Kind.TOUCH: "S", Kind.RENAME: "R", Kind.E_NEG: "E-", Kind.E_POS: "E+", Kind.ION: "I", Kind.COV: "C"}
RULE_LABELS = ("E-", "E+", "I", "C", "~E-", "~E+", "~I", "~C")


def kind_label(gen: Generator) -> str:
    return ("~" if gen.bar else "") + _LABELS[gen.kind]


def _free_electrons(g: ChemGraph) -> List[str]:
    return sorted(x for x in g.alpha_vertices() if g.charge(x) == -1 and not g.neighbours(x))


def _neutral_sites(g: ChemGraph) -> List[Tuple[str, str]]:
    """(site, anchor) for every neutral binding site on a chemical vertex."""
    sites = []
    for x in sorted(g.alpha_vertices()):
        anchors = sorted(g.covalent_neighbours(x))
        if g.charge(x) == 0 and len(anchors) == 1 and g.is_chemical(anchors[0]):
            sites.append((x, anchors[0]))
    return sites


def candidate_generators(g: ChemGraph, a: str, b: str) -> Dict[str, List[Generator]]:
    """Generators of every kind that might apply to `g`, keyed by kind label, with `a` and `b` as fresh names."""
    chem = sorted(g.chemical_vertices())
    alphas = sorted(g.alpha_vertices())
    positive = sorted(g.positive_vertices())
    electrons = _free_electrons(g)
    sites = _neutral_sites(g)
    return {
        "S": [touch(v) for v in sorted(g.vertices)],
        "R": [rename(x, a) for x in alphas],
        "E-": [e_neg(u, a, b) for u in sorted(g.negative_vertices(chem))],
        "E+": [e_pos(u, x) for u in chem for x in alphas if g.bond(u, x) == 1],
        "I": [ion(u, v) for u in positive for v in sorted(g.ionic_neighbours(u))],
        "C": [cov(u, v, a, b) for u in chem for v in chem if u != v and cov_label(g.bond(u, v)) > 0],
        "~E-": [e_neg(u, x, y, bar=True) for x, u in sites for y in electrons],
        "~E+": [e_pos(u, y, bar=True) for u in sorted(g.positive_vertices(chem)) for y in electrons],
        "~I": [ion(u, v, bar=True) for u in positive for v in sorted(g.negative_vertices())
               if g.bond(u, v) == 0],
        "~C": [cov(u, v, x, y, bar=True) for x, u in sites for y, v in sites if u != v],
    }


def applicable_rules(g: ChemGraph, a: str, b: str) -> List[Generator]:
    """Disconnections and connections that apply to `g`."""
    candidates = candidate_generators(g, a, b)
    return [gen for label in RULE_LABELS for gen in candidates[label]
            if not isinstance(apply_generator(gen, g), Undefined)]


# Schemas: axioms whose rule variables range over generators

class SchemaInstance(NamedTuple):
    lhs: Term
    rhs: Term
    kinds: Tuple[str, ...]


Builder = Callable[[ChemGraph, random.Random], List[SchemaInstance]]


@dataclass(frozen=True)
class Schema:
    name: str
    relation: str
    kinds: Tuple[str, ...]
    build: Builder = field(compare=False, repr=False)


def _fresh(g: ChemGraph, count: int) -> List[str]:
    names: List[str] = []
    for k in range(count):
        names.append(freshen(f"z{k}", set(g.vertices) | set(names)))
    return names


def _cancelling_pairs(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """d;d~ touches the vertices of d that exist beforehand."""
    a, b = _fresh(g, 2)
    found = []
    for d in applicable_rules(g, a, b):
        lhs = Term.of(d, d.dagger())
        if is_well_typed(lhs, g):
            rhs = Term.of(*(touch(v) for v in d.names() if v in g))
            found.append(SchemaInstance(lhs, rhs, (kind_label(d),)))
    return found


def _absorbed_touches(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """d;S(w) is d for any vertex d changes or creates."""
    a, b = _fresh(g, 2)
    found = []
    for d in applicable_rules(g, a, b):
        cod = eval_term(Term.of(d), g)
        touched = [w for w in d.changed + d.added if w in cod]
        if touched:
            found.append(SchemaInstance(Term.of(d, touch(rng.choice(touched))), Term.of(d), (kind_label(d),)))
    return found


def _passing_touches(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """A touch of a vertex d does not mention moves past d."""
    a, b = _fresh(g, 2)
    found = []
    for d in applicable_rules(g, a, b):
        others = sorted(g.vertices - set(d.names()))
        if others:
            o = touch(rng.choice(others))
            found.append(SchemaInstance(Term.of(o, d), Term.of(d, o), (kind_label(d),)))
    return found


def _passing_renames(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """A rename of a binding site d does not mention moves past d."""
    a, b, x = _fresh(g, 3)
    found = []
    for d in applicable_rules(g, a, b):
        sites = sorted(g.alpha_vertices() - set(d.names()))
        if sites:
            r = rename(rng.choice(sites), x)
            found.append(SchemaInstance(Term.of(r, d), Term.of(d, r), (kind_label(d),)))
    return found


def _disjoint_rules(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """Two rules on disjoint vertices commute."""
    a, b, c, d = _fresh(g, 4)
    found = []
    for first in applicable_rules(g, a, b):
        after = eval_term(Term.of(first), g)
        seconds = [s for s in applicable_rules(after, c, d) if not set(s.names()) & set(first.names())]
        if seconds:
            second = rng.choice(seconds)
            found.append(SchemaInstance(
                Term.of(first, second), Term.of(second, first), (kind_label(first), kind_label(second))))
    return found


def _renamed_new_sites(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """Renaming a site right after d creates it is d creating it under the new name."""
    a, b, x = _fresh(g, 3)
    found = []
    for d in applicable_rules(g, a, b):
        if d.bar or not d.added:
            continue
        site = rng.choice(d.added)
        found.append(SchemaInstance(Term.of(d, rename(site, x)), Term.of(d.renamed({site: x})), (kind_label(d),)))
    return found


def _renamed_arguments(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """R(p>x);d is d on p followed by the rename, when d keeps the site."""
    a, b, x = _fresh(g, 3)
    found = []
    for p in sorted(g.alpha_vertices()):
        moved = g.rename(p, x)
        for d in applicable_rules(moved, a, b):
            if x in d.names() and x not in d.added:
                found.append(SchemaInstance(
                    Term.of(rename(p, x), d), Term.of(d.renamed({x: p}), rename(p, x)), (kind_label(d),)))
    return found


def _double_bond_swaps(g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """Breaking a multiple bond twice does not care which new sites pair up."""
    a, b, c, d = _fresh(g, 4)
    found = []
    for (u, v), label in sorted(g.bonds.items()):
        if g.is_chemical(u) and g.is_chemical(v) and cov_label(label) >= 2:
            lhs = Term.of(cov(u, v, a, b), cov(u, v, c, d))
            rhs = Term.of(cov(u, v, a, d), cov(u, v, c, b))
            found.append(SchemaInstance(lhs, rhs, ("C",)))
    return found


SCHEMAS: Tuple[Schema, ...] = (
    Schema("cancel", LESSSIM, RULE_LABELS, _cancelling_pairs),
    Schema("absorb", SIMEQ, RULE_LABELS, _absorbed_touches),
    Schema("touch-past", LESSSIM, RULE_LABELS, _passing_touches),
    Schema("rename-past", APPROX, RULE_LABELS, _passing_renames),
    Schema("disjoint", LESSSIM, RULE_LABELS, _disjoint_rules),
    Schema("rename-new", SIMEQ, ("E-", "C"), _renamed_new_sites),
    Schema("rename-argument", SIMEQ, ("E+", "I", "~E+", "~I"), _renamed_arguments),
    Schema("bond-index", SIMEQ, ("C",), _double_bond_swaps),
)


def schema_instances(schema: Schema, g: ChemGraph, rng: random.Random) -> List[SchemaInstance]:
    """Instances of `schema` on the chemical graph `g` whose left side is well-typed."""
    found = [inst for inst in schema.build(g, rng) if is_well_typed(inst.lhs, g)]
    logger.debug(f"Schema {schema.name} has {len(found)} instances on {g.name or 'graph'}")
    return found
