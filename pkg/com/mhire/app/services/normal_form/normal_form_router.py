import logging
import time

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException
from com.mhire.app.services.disconnection_engine.disconnection_engine import type_term
from com.mhire.app.services.normal_form.normal_form import (
    canonical_form, check_normal_form, decide_equiv, explain_difference, to_normal_form,
)
from com.mhire.app.services.normal_form.normal_form_schema import EqualityResult, NormalizeResult
from com.mhire.app.utils.format_utility.graph_format import load_graph
from com.mhire.app.utils.format_utility.term_format import load_term

logger = logging.getLogger(__name__)


def register(subparsers):
    normalize = subparsers.add_parser("normalize", help="Print the canonical normal form of a term")
    normalize.add_argument("term", help="Term file")
    normalize.add_argument("--graph", required=True, help="Domain graph file")
    normalize.set_defaults(handler=normalize_term)

    equal = subparsers.add_parser("equal", help="Decide whether two terms denote the same reaction")
    equal.add_argument("left", help="First term file")
    equal.add_argument("right", help="Second term file")
    equal.add_argument("--graph", required=True, help="Domain graph file")
    equal.add_argument("--explain", action="store_true", help="List the differing reaction components")
    equal.set_defaults(handler=compare_terms)


def normalize_term(args) -> CliOutput:
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received normalize request for {args.term}")

        g = load_graph(args.graph)
        t = type_term(load_term(args.term), g)
        nf = canonical_form(to_normal_form(t, g))
        result = NormalizeResult(
            term=str(t),
            normal_form=str(nf),
            input_failed_conditions=check_normal_form(t, g),
        )
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS,
            message=f"Normal form has {len(nf)} generators",
            data=result.model_dump(),
            resource="normalize",
            start_time=start_time,
            text=result.normal_form,
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in normalize_term: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="normalize",
            start_time=start_time
        )


def compare_terms(args) -> CliOutput:
    """Exit 0 when the terms are equal on the graph, 1 when they differ."""
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received equal request: {args.left} vs {args.right}")

        g = load_graph(args.graph)
        left, right = load_term(args.left), load_term(args.right)

        same = decide_equiv(left, right, g)
        explanation = explain_difference(left, right, g) if args.explain else []
        result = EqualityResult(left=str(left), right=str(right), equal=same, explanation=explanation)
        text = "EQUAL" if same else "DIFFERENT"
        if explanation:
            text += "\n" + "\n".join(f"  {line}" for line in explanation)
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS if same else ExitCode.NEGATIVE,
            message="Terms are equal" if same else "Terms differ",
            data=result.model_dump(),
            resource="equal",
            start_time=start_time,
            text=text,
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in compare_terms: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="equal",
            start_time=start_time
        )
