import logging
import time

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException, PreconditionError
from com.mhire.app.services.chirality.chirality import validate_orientation, verdict_triple
from com.mhire.app.services.chirality.chirality_schema import ChiralityVerdict
from com.mhire.app.utils.format_utility.graph_format import load_oriented_graph

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("chiral", help="Decide whether two oriented graphs are mirror images")
    parser.add_argument("left", help="Oriented graph file")
    parser.add_argument("right", help="Oriented graph file")
    parser.set_defaults(handler=check_chirality)


def check_chirality(args) -> CliOutput:
    """Exit 0 when the pair is chiral, 1 otherwise."""
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received chiral request: {args.left} vs {args.right}")

        M, N = load_oriented_graph(args.left), load_oriented_graph(args.right)

        # Validate input
        for og in (M, N):
            problems = validate_orientation(og)
            if problems:
                raise PreconditionError(f"orientation of {og.name} is invalid: {problems[0]}")

        verdict = verdict_triple(M, N)
        result = ChiralityVerdict(
            left=M.name,
            right=N.name,
            preserving=verdict.preserving,
            reflecting=verdict.reflecting,
            chiral=verdict.chiral,
        )
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS if verdict.chiral else ExitCode.NEGATIVE,
            message="CHIRAL" if verdict.chiral else "NOT CHIRAL",
            data=result.model_dump(),
            resource="chiral",
            start_time=start_time,
            text=str(verdict),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in check_chirality: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="chiral",
            start_time=start_time
        )
