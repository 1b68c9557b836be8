import logging
import time

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException
from com.mhire.app.services.disconnection_engine.disconnection_engine import trace_term
from com.mhire.app.services.disconnection_engine.disconnection_engine_schema import TermApplication
from com.mhire.app.utils.format_utility.graph_format import load_graph, print_graph
from com.mhire.app.utils.format_utility.term_format import load_term

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("apply-term", help="Evaluate a disconnection term on a graph")
    parser.add_argument("graph", help="Domain graph file")
    parser.add_argument("term", help="Term file")
    parser.add_argument("--trace", action="store_true", help="Print every intermediate graph")
    parser.set_defaults(handler=apply_term)


def apply_term(args) -> CliOutput:
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received apply-term request: {args.term} on {args.graph}")

        g = load_graph(args.graph)
        t = load_term(args.term)
        visited = trace_term(t, g)
        result = print_graph(visited[-1])
        application = TermApplication(
            term=str(t),
            length=len(t),
            domain=g.name,
            result=result,
            trace=[print_graph(h) for h in visited[1:-1]] if args.trace else [],
        )
        text = "".join(application.trace) + result if args.trace else result
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS,
            message=f"Applied {len(t)} generators",
            data=application.model_dump(),
            resource="apply-term",
            start_time=start_time,
            text=text.rstrip("\n"),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in apply_term: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="apply-term",
            start_time=start_time
        )
