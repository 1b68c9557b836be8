import logging
import time

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException
from com.mhire.app.services.react_bridge.react_bridge import decompose, image_check, translate
from com.mhire.app.services.react_bridge.react_bridge_schema import DecomposeResult, TranslateResult
from com.mhire.app.utils.format_utility.graph_format import load_graph
from com.mhire.app.utils.format_utility.reaction_format import load_reaction, print_reaction
from com.mhire.app.utils.format_utility.term_format import load_term

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("translate", help="Print the reaction a term denotes")
    parser.add_argument("term", help="Term file")
    parser.add_argument("--graph", required=True, help="Domain graph file")
    parser.set_defaults(handler=translate_term)

    parser = subparsers.add_parser("decompose", help="Factor a reaction into a term and a relabelling")
    parser.add_argument("reaction", help="Reaction file")
    parser.set_defaults(handler=decompose_reaction)


def translate_term(args) -> CliOutput:
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received translate request for {args.term}")

        g = load_graph(args.graph)
        t = load_term(args.term)
        r = translate(t, g)
        result = TranslateResult(term=str(t), reaction=print_reaction(r), image_form=image_check(r))
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS,
            message=f"Reaction changes {len(r.changed_dom)} vertices",
            data=result.model_dump(),
            resource="translate",
            start_time=start_time,
            text=result.reaction.rstrip("\n"),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in translate_term: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="translate",
            start_time=start_time
        )


def decompose_reaction(args) -> CliOutput:
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received decompose request for {args.reaction}")

        r = load_reaction(args.reaction)
        t, iota = decompose(r)
        result = DecomposeResult(term=str(t), length=len(t), iota=print_reaction(iota))
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS,
            message=f"Decomposed into {len(t)} generators",
            data=result.model_dump(),
            resource="decompose",
            start_time=start_time,
            text=f"{result.term}\n{result.iota}".rstrip("\n"),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in decompose_reaction: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="decompose",
            start_time=start_time
        )
