"""
The `snd` command line.

Every scenario reads an experiment configuration (a flat TOML file of
`key = value` lines), applies flag overrides, and writes its report rows as
CSV plus a JSON summary. Exit codes: 0 on success, 1 for usage and
configuration errors, 2 for failures while running.
"""

import logging
from argparse import ArgumentParser, Namespace
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from pydantic import ValidationError
from toml import TomlDecodeError, load

from ..api.main import load_server_encoder, run_webserver
from ..config import get_config
from ..exceptions import ConfigError, SplitDenoiseError
from ..protocol.client import Session
from ..protocol.server import FrameServer
from ..protocol.transport import HttpTransport, InProcessTransport
from ..schemas.experiment import ExperimentConfig
from ..schemas.report import ReportRow
from . import experiments
from .corpus import build_vocabulary
from .reports import write_report

log = logging.getLogger(__name__)

INPROCESS = "inprocess"

Runner = Callable[[ExperimentConfig, Namespace], List[ReportRow]]


class UsageParser(ArgumentParser):
    """An argument parser whose usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage()
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_experiment(
    path: Optional[str], overrides: Dict[str, Any], scenario: str = "default"
) -> ExperimentConfig:
    """
    Read the experiment file, if any, and apply flag overrides on top. Rows are
    labeled `scenario` unless the file or a flag names one.
    """

    values: Dict[str, Any] = {}
    if path is not None:
        try:
            values = load(path)
        except (OSError, TomlDecodeError) as err:
            raise ConfigError(f"cannot read experiment config {path}: {err}") from err
    values.update({key: value for key, value in overrides.items() if value is not None})
    values.setdefault("scenario", scenario)
    try:
        return ExperimentConfig(**values)
    except ValidationError as err:
        raise ConfigError(str(err)) from err


def _session(config: ExperimentConfig, endpoint: Optional[str]) -> Session:
    if endpoint == INPROCESS:
        _, encoder, _ = build_vocabulary(config)
        return Session(InProcessTransport(FrameServer(encoder)))
    if endpoint:
        return Session(HttpTransport(endpoint, get_config().client.timeout_seconds))
    return Session.from_settings(get_config().client)


RUNNERS: Dict[str, Runner] = {
    "train-denoiser": lambda config, _: experiments.train_denoiser_experiment(config),
    "infer": lambda config, args: experiments.infer_experiment(
        config, _session(config, args.endpoint)
    ),
    "attack-inversion": lambda config, _: experiments.inversion_experiment(config),
    "attack-attribute": lambda config, _: experiments.attribute_experiment(config),
    "mi": lambda config, _: experiments.mi_experiment(config),
    "geometry": lambda config, _: experiments.geometry_experiment(config),
    "sweep": lambda config, _: experiments.eta_sweep(config),
    "ablate-server-denoise": lambda config, _: experiments.ablation_server_denoise(config),
    "ablate-clipping": lambda config, _: experiments.ablation_clipping(config),
    "update-drill": lambda config, _: experiments.model_update_drill(config),
    "similarity": lambda config, _: experiments.similarity_experiment(config),
}


def _scenario_flags(parser: ArgumentParser, scenario: str) -> None:
    parser.set_defaults(scenario_name=scenario)
    parser.add_argument("--config", help="Experiment configuration file (TOML).")
    parser.add_argument("--output", help="CSV destination; the JSON summary goes next to it.")
    parser.add_argument("--scenario", help="Scenario label written to every row.")
    parser.add_argument(
        "--eta", type=float, action="append", help="Privacy level; repeat for a grid."
    )
    parser.add_argument("--seed", type=int, action="append", help="Run seed; repeatable.")
    parser.add_argument("--n", type=int, dest="samples", help="Sample count.")
    parser.add_argument("--method", action="append", help="Client method; repeatable.")


def build_parser() -> ArgumentParser:
    parser = UsageParser(
        prog="snd", description="Split inference with client-side denoising."
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    serve = commands.add_parser("serve", help="Run the embedding server.")
    serve.add_argument("--host", help="Interface to bind.")
    serve.add_argument("--port", type=int, help="Port to bind.")

    for name, help_text in (
        ("train-denoiser", "Partition the eta grid and train the denoiser registry."),
        ("infer", "Run the client pipeline against an embedding server."),
        ("mi", "Estimate I(privatized tokens; noise)."),
        ("geometry", "Vocabulary spacing against noise length."),
        ("sweep", "Downstream utility of every method over the eta grid."),
        ("update-drill", "Denoiser quality across a server encoder update."),
        ("similarity", "Token frequency rank correlation between two corpora."),
    ):
        scenario = commands.add_parser(name, help=help_text)
        _scenario_flags(scenario, name)
        if name == "infer":
            scenario.add_argument(
                "--endpoint", help=f"Server URL, or '{INPROCESS}' for a local frame server."
            )

    for group, kinds, help_text in (
        ("attack", ("inversion", "attribute"), "Run a privacy attack."),
        ("ablate", ("server-denoise", "clipping"), "Run an ablation."),
    ):
        kind_parsers = commands.add_parser(group, help=help_text).add_subparsers(
            dest="kind", metavar="KIND"
        )
        kind_parsers.required = True
        for kind in kinds:
            _scenario_flags(kind_parsers.add_parser(kind), f"{group}-{kind}")
    return parser


def serve(args: Namespace) -> None:
    settings = get_config().server
    updates = {key: getattr(args, key) for key in ("host", "port") if getattr(args, key)}
    settings = settings.copy(update=updates)
    run_webserver(settings, load_server_encoder(settings))


def run_scenario(args: Namespace) -> List[ReportRow]:
    name: str = args.scenario_name
    config = load_experiment(
        args.config,
        {
            "output": args.output,
            "etas": args.eta,
            "seeds": args.seed,
            "samples": args.samples,
            "methods": args.method,
            "scenario": args.scenario,
        },
        scenario=name,
    )

    log.info("Running %s with config %s", name, config.json())
    rows = RUNNERS[name](config, args)
    write_report(rows, config.output)
    return rows


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the `snd` console script."""

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    try:
        get_config()
        if args.command == "serve":
            serve(args)
        else:
            run_scenario(args)
    except ConfigError as err:
        log.error("%s", err)
        return 1
    except ValidationError as err:
        log.error("Invalid settings: %s", err)
        return 1
    except (SplitDenoiseError, OSError) as err:
        log.error("%s failed: %s", args.command, err, exc_info=True)
        return 2
    return 0
