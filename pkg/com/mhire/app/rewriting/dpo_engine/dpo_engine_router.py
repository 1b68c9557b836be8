import logging
import time

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException, PreconditionError
from com.mhire.app.rewriting.dpo_engine.dpo_engine import (
    apply_scheme, instance_to_tuple, scheme_violations,
)
from com.mhire.app.rewriting.dpo_engine.dpo_engine_schema import SchemeApplication
from com.mhire.app.utils.format_utility.reaction_format import (
    load_morphism, load_scheme, print_instance, print_reaction,
)

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("apply-scheme", help="Apply a reaction scheme along a matching")
    parser.add_argument("scheme", help="Scheme file")
    parser.add_argument("matching", help="Morphism file from the scheme's left side into the reactants")
    parser.add_argument("--reaction", action="store_true", help="Print the reaction instead of the instance")
    parser.set_defaults(handler=apply_reaction_scheme)


def apply_reaction_scheme(args) -> CliOutput:
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received apply-scheme request: {args.scheme} along {args.matching}")

        scheme = load_scheme(args.scheme)
        m = load_morphism(args.matching)

        # Validate input
        problems = scheme_violations(scheme)
        if problems:
            raise PreconditionError(f"invalid scheme {scheme.name}: {problems[0].clause}: {problems[0].message}")

        inst = apply_scheme(scheme, m)
        result = SchemeApplication(
            scheme=scheme.name,
            interface_vertices=len(scheme.interface),
            instance=print_instance(inst),
            reaction=print_reaction(instance_to_tuple(inst)),
        )
        text = result.reaction if args.reaction else result.instance
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS,
            message=f"Applied scheme {scheme.name}",
            data=result.model_dump(),
            resource="apply-scheme",
            start_time=start_time,
            text=text.rstrip("\n"),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in apply_reaction_scheme: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="apply-scheme",
            start_time=start_time
        )
