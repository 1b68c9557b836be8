import logging
from typing import List, Optional

from com.mhire.app.chemistry.chem_graph.chem_graph import ChemGraph, IONIC, bond_key
from com.mhire.app.chemistry.chem_graph.valence_table import ValenceTable
from com.mhire.app.common.violation_schema import Violation

logger = logging.getLogger(__name__)


class ChemGraphValidator:
    """Checks the pre-chemical and chemical graph conditions, reporting violations as data."""

    def __init__(self, valences: Optional[ValenceTable] = None):
        self.valences = valences or ValenceTable.from_config()

    def prechemical_violations(self, g: ChemGraph) -> List[Violation]:
        violations: List[Violation] = []
        for v in sorted(g.alpha_vertices()):
            if g.charge(v) not in (-1, 0, 1):
                violations.append(Violation(
                    clause="alpha-charge", vertices=[v],
                    message=f"binding site has charge {g.charge(v)}"))
            nbrs = sorted(g.neighbours(v))
            for w in nbrs:
                if g.bond(v, w) not in (1, IONIC):
                    violations.append(Violation(
                        clause="alpha-bond", vertices=list(bond_key(v, w)),
                        message=f"binding site bond label {g.bond(v, w)}"))
            if len(nbrs) > 1:
                violations.append(Violation(
                    clause="alpha-degree", vertices=[v] + nbrs,
                    message=f"binding site has {len(nbrs)} neighbours"))
            for w in nbrs:
                if g.is_alpha(w) and v < w:
                    violations.append(Violation(
                        clause="alpha-neighbour", vertices=[v, w],
                        message="two binding sites are adjacent"))
        for v in sorted(g.chemical_vertices()):
            ionic = g.ionic_neighbours(v)
            if not ionic:
                continue
            chemical = [u for u in ionic if g.is_chemical(u)]
            single_chemical = len(ionic) == 1 and len(chemical) == 1
            alphas = [u for u in ionic if g.is_alpha(u)]
            same_sign_alphas = len(alphas) == len(ionic) and (
                all(g.charge(u) > 0 for u in alphas) or all(g.charge(u) < 0 for u in alphas))
            if not (single_chemical or same_sign_alphas):
                violations.append(Violation(
                    clause="ionic-neighbours", vertices=[v] + sorted(ionic),
                    message="ionic neighbours must be one chemical vertex or same-sign binding sites"))
            if g.charge(v) == 0 or g.charge(v) != -g.net_charge(ionic):
                violations.append(Violation(
                    clause="ionic-charge", vertices=[v] + sorted(ionic),
                    message=f"charge {g.charge(v)} does not balance ionic neighbours ({g.net_charge(ionic)})"))
        return violations

    def valence_violations(self, g: ChemGraph) -> List[Violation]:
        violations: List[Violation] = []
        for v in sorted(g.vertices):
            expected = self.valences[g.atom(v)]
            actual = abs(g.charge(v)) + g.bond_sum(v)
            if actual != expected:
                violations.append(Violation(
                    clause="valence", vertices=[v],
                    message=f"{g.atom(v)} uses {actual} of valence {expected}"))
        return violations

    def chemical_violations(self, g: ChemGraph) -> List[Violation]:
        violations = self.prechemical_violations(g) + self.valence_violations(g)
        for v in sorted(g.positive_vertices(g.alpha_vertices())):
            violations.append(Violation(
                clause="positive-alpha", vertices=[v], message="binding site is positively charged"))
        return violations


def validate_prechemical(g: ChemGraph) -> List[Violation]:
    return ChemGraphValidator(ValenceTable()).prechemical_violations(g)


def validate_chemical(g: ChemGraph, valences: Optional[ValenceTable] = None) -> List[Violation]:
    return ChemGraphValidator(valences).chemical_violations(g)


def is_prechemical(g: ChemGraph) -> bool:
    return not validate_prechemical(g)


def is_valence_complete(g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    validator = ChemGraphValidator(valences)
    return not validator.prechemical_violations(g) and not validator.valence_violations(g)


def is_chemical(g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    return not validate_chemical(g, valences)


def is_synthon(g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    """Connected chemical graph."""
    return is_chemical(g, valences) and len(g.connected_components()) <= 1


def is_molecular(g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    """Chemical graph without binding sites."""
    return is_chemical(g, valences) and not g.alpha_vertices()


def is_molecular_entity(g: ChemGraph, valences: Optional[ValenceTable] = None) -> bool:
    return is_molecular(g, valences) and len(g.connected_components()) == 1

