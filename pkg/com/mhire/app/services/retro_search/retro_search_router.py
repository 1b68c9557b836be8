import logging
import time
from pathlib import Path
from typing import List

from com.mhire.app.common.cli_responses import CliOutput, CliResponse, ExitCode
from com.mhire.app.common.errors import CliException, ConfigurationError, ParseError
from com.mhire.app.rewriting.dpo_engine.dpo_engine import ReactionScheme
from com.mhire.app.services.retro_search.retro_search import (
    Environment, RetroStep, SearchBounds, search_step,
)
from com.mhire.app.services.retro_search.retro_search_schema import RetroStepResult, StepSummary
from com.mhire.app.utils.fingerprint_utility.fingerprint import LookupOracle
from com.mhire.app.utils.format_utility.graph_format import load_graph, load_graphs, print_graph
from com.mhire.app.utils.format_utility.reaction_format import load_scheme, print_morphism, print_reaction
from com.mhire.app.utils.format_utility.term_format import load_terms, print_term

logger = logging.getLogger(__name__)

SCHEME_SUFFIX = ".scheme"


def register(subparsers):
    parser = subparsers.add_parser("retro-step", help="Search single retrosynthetic steps for a target")
    parser.add_argument("--target", required=True, help="Target molecule graph file")
    parser.add_argument("--rules", required=True, help="Disconnection terms, one per line")
    parser.add_argument("--schemes", help=f"Directory of {SCHEME_SUFFIX} reaction scheme files")
    parser.add_argument("--env", help="Environment molecules, several graphs in one file")
    parser.add_argument("--oracle", help="Lookup table of `reactants -> products` fingerprints")
    parser.add_argument("--bounds", help="Overrides such as term_length=4,multiplicity=2,candidates=10,timeout=5")
    parser.add_argument("--out", required=True, help="Directory receiving one step_<k> bundle per step")
    parser.set_defaults(handler=retro_step)


def load_schemes(directory) -> List[ReactionScheme]:
    path = Path(directory)
    if not path.is_dir():
        raise ConfigurationError(f"scheme directory {directory} does not exist")
    schemes = [load_scheme(p) for p in sorted(path.glob(f"*{SCHEME_SUFFIX}"))]
    logger.info(f"Loaded {len(schemes)} reaction schemes from {directory}")
    return schemes


def write_bundle(step: RetroStep, directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "target.cg": print_graph(step.target),
        "synthons.cg": print_graph(step.synthons),
        "equivalents.cg": print_graph(step.equivalents),
        "byproduct.cg": print_graph(step.byproduct),
        "disconnection.term": print_term(step.disconnection) + "\n",
        "matching.morphism": print_morphism(step.matching.matching),
        "reaction.reaction": print_reaction(step.reaction.reaction),
    }
    for name, text in files.items():
        (directory / name).write_text(text, encoding="utf-8")


def retro_step(args) -> CliOutput:
    """Write every step found under --out. Exit 1 when there are none."""
    start_time = time.time()
    cli_response = CliResponse()

    try:
        logger.info(f"Received retro-step request for {args.target}")

        # Validate input
        out = Path(args.out)
        if out.exists() and not out.is_dir():
            raise ParseError(f"output path {out} is not a directory")

        target = load_graph(args.target)
        rules = load_terms(args.rules)
        schemes = load_schemes(args.schemes) if args.schemes else []
        oracle = LookupOracle.from_file(args.oracle) if args.oracle else None
        environment = Environment(tuple(load_graphs(args.env))) if args.env else Environment()
        bounds = SearchBounds.from_config().with_overrides(args.bounds)

        found = search_step(target, rules, schemes, oracle, environment, bounds)
        summaries = []
        for k, step in enumerate(found.steps, start=1):
            bundle = out / f"step_{k}"
            write_bundle(step, bundle)
            summaries.append(StepSummary(
                bundle=str(bundle),
                key=step.key,
                disconnection=str(step.disconnection),
                multiplicity=list(step.matching.multiplicity),
                byproduct_vertices=len(step.byproduct),
            ))
        result = RetroStepResult(
            target=target.name, steps=summaries, truncated=found.truncated, reason=found.reason)

        lines = [f"{s.bundle}: {s.disconnection}" for s in summaries]
        lines.append(f"{len(summaries)} steps" + (f" (truncated: {found.reason})" if found.truncated else ""))
        return cli_response.success_response(
            exit_code=ExitCode.SUCCESS if summaries else ExitCode.NEGATIVE,
            message=f"Found {len(summaries)} retrosynthetic steps",
            data=result.model_dump(),
            resource="retro-step",
            start_time=start_time,
            text="\n".join(lines),
        )

    except CliException:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in retro_step: {e}")
        return cli_response.json_response(
            exit_code=ExitCode.INTERNAL_ERROR,
            error_message=f"Internal error: {str(e)}",
            resource="retro-step",
            start_time=start_time
        )
