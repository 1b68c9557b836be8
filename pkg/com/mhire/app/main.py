import argparse
import logging
import os
import sys
import time
from typing import List, Optional

from com.mhire.app.chemistry.chem_graph.chem_graph_router import register as register_validate
from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException
from com.mhire.app.config.config import Config
from com.mhire.app.rewriting.dpo_engine.dpo_engine_router import register as register_dpo
from com.mhire.app.services.chirality.chirality_router import register as register_chirality
from com.mhire.app.services.disconnection_engine.disconnection_engine_router import register as register_terms
from com.mhire.app.services.normal_form.normal_form_router import register as register_normal_form
from com.mhire.app.services.react_bridge.react_bridge_router import register as register_bridge
from com.mhire.app.services.retro_search.retro_search_router import register as register_retro

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("text", "json-lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemcalc",
        description="Chemical graphs, disconnection terms, reactions, chirality and retrosynthetic steps",
    )
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="text", help="Output format")
    parser.add_argument("--log-level", help="Logging level, overriding LOG_LEVEL")
    parser.add_argument("--valences", help="Valence table file, overriding VALENCE_FILE")

    # Register routers
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_validate(subparsers)
    register_terms(subparsers)
    register_normal_form(subparsers)
    register_bridge(subparsers)
    register_dpo(subparsers)
    register_chirality(subparsers)
    register_retro(subparsers)
    return parser


def dispatch(args) -> CliOutput:
    """Run the subcommand, turning exceptions into the error envelope."""
    start_time = time.time()
    cli_response = CliResponse()
    try:
        return args.handler(args)
    except CliException as exc:
        logger.info(f"{args.command} failed with exit code {exc.exit_code}: {exc.detail}")
        return cli_response.json_response(
            exit_code=exc.exit_code,
            error_message=str(exc.detail),
            resource=args.command,
            start_time=start_time
        )
    except Exception as exc:
        logger.error(f"Unhandled error in {args.command}: {exc}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(exc)}",
            resource=args.command,
            start_time=start_time
        )


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return ExitCode.SUCCESS if exc.code == 0 else ExitCode.INPUT_ERROR

    if args.valences:
        os.environ["VALENCE_FILE"] = args.valences
        Config.reset()
    try:
        config = Config()
        level = (args.log_level or config.log_level).upper()
        logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr)
        output = dispatch(args)
    except CliException as exc:
        output = CliResponse().json_response(
            exit_code=exc.exit_code, error_message=str(exc.detail), resource="config", start_time=time.time())

    stream = sys.stdout if output.exit_code in (ExitCode.SUCCESS, ExitCode.NEGATIVE) else sys.stderr
    print(output.render(args.format), file=stream)
    return output.exit_code


if __name__ == "__main__":
    sys.exit(run())
