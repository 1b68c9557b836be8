import logging
import time

from com.mhire.app.chemistry.chem_graph.chem_graph_schema import GraphReport
from com.mhire.app.chemistry.chem_graph.chem_graph_validator import (
    is_molecular_entity, is_synthon, validate_chemical,
)
from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException
from com.mhire.app.common.violation_schema import Violation
from com.mhire.app.services.chirality.chirality import validate_orientation
from com.mhire.app.utils.format_utility.graph_format import load_oriented_graph

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("validate", help="Check a graph against the chemical graph clauses")
    parser.add_argument("graph", help="Graph file, optionally with tri/tet orientation lines")
    parser.add_argument("--molecular", action="store_true",
                        help="Also require a connected graph without binding sites")
    parser.set_defaults(handler=validate_graph)


def _report_text(report: GraphReport) -> str:
    verdict = "chemical" if report.chemical else "not chemical"
    lines = [f"{report.name}: {verdict} ({report.vertices} vertices, {report.bonds} bonds, "
             f"{report.components} components)"]
    for v in report.violations:
        lines.append(f"  {v.clause} [{' '.join(v.vertices)}]: {v.message}")
    return "\n".join(lines)


def validate_graph(args) -> CliOutput:
    """Validate a graph file. Exit 1 when any clause fails."""
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received validate request for {args.graph}")

        og = load_oriented_graph(args.graph)
        g = og.base
        chemical_violations = validate_chemical(g)
        violations = chemical_violations + validate_orientation(og)
        molecular = is_molecular_entity(g)
        if args.molecular and not molecular:
            violations.append(Violation(
                clause="molecular", vertices=sorted(g.alpha_vertices()),
                message="graph is not a connected chemical graph without binding sites"))
        report = GraphReport(
            name=og.name,
            vertices=len(g),
            bonds=len(g.bonds),
            components=len(g.connected_components()),
            chemical=not chemical_violations,
            molecular=molecular,
            synthon=is_synthon(g),
            triangles=len(og.tri),
            tetrahedra=len(og.tet),
            violations=violations,
        )
        failed = bool(violations)
        return cli_response.success_response(
            exit_code=ExitCode.NEGATIVE if failed else ExitCode.SUCCESS,
            message="Graph is invalid" if failed else "Graph is valid",
            data=report.model_dump(),
            resource="validate",
            start_time=start_time,
            text=_report_text(report),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in validate_graph: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="validate",
            start_time=start_time
        )
