"""Command-line entry point.

Subcommands ``fit``, ``band``, ``test-curves``, ``test-med`` analyse a
two-group dataset; ``simulate`` runs a Monte Carlo study of a catalogued
scenario.  Exit status is 0 whenever the analysis completes (a test that
does not claim similarity is still a success), 2 for configuration or
data errors and 3 for numerical failures, which still emit a partial
report with a ``failure`` section.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from curveq import report as rp
from curveq.config import AnalysisConfig, build_config, load_config_file
from curveq.errors import ConfigError, CurveqError, DataFormatError
from curveq.fitting import GroupDataset, fit
from curveq.io import band_csv, ingest_dataset
from curveq.models import DoseRange
from curveq.report import ReportBundle
from curveq.scenarios import SCENARIO_NAMES, get_scenario
from curveq.similarity import band, test_curves
from curveq.simulation import run_replications
from curveq.target_dose import infer_med

__all__ = ["SUBCOMMANDS", "build_parser", "run_subcommand", "main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SUBCOMMANDS = ("fit", "band", "test-curves", "test-med", "simulate")

# config fields each subcommand reads
_FIELDS = {
    "fit": ("data", "model1", "model2", "variance_divisor"),
    "band": (
        "data", "model1", "model2", "variance_divisor", "dose_min", "dose_max",
        "grid_points", "alpha", "placebo_adjusted", "quantile", "band_csv",
    ),
    "test-med": ("data", "model1", "model2", "variance_divisor", "alpha", "clinical_delta", "eta"),
    "simulate": (
        "scenario", "kind", "delta1", "sigma2", "n", "grid_points", "alpha", "clinical_delta",
        "placebo_adjusted", "quantile", "reps", "full_scale", "seed", "margin",
    ),
}
_FIELDS["test-curves"] = _FIELDS["band"] + ("delta",)

_HELP = {
    "data": "CSV file with columns group,dose,response",
    "model1": "model family for the first group",
    "model2": "model family for the second group",
    "variance_divisor": "divisor for the residual variance",
    "dose_min": "lower end of the dose range (default: smallest observed dose)",
    "dose_max": "upper end of the dose range (default: largest observed dose)",
    "grid_points": "number of equally spaced doses in the range",
    "alpha": "significance level",
    "placebo_adjusted": "compare curves after subtracting their placebo response",
    "quantile": "quantile source for the pointwise bounds",
    "band_csv": "write the pointwise band to this CSV file",
    "delta": "equivalence margin for the maximum absolute curve difference",
    "clinical_delta": "clinically relevant effect over placebo defining the MED",
    "eta": "equivalence margin for the MED difference",
    "scenario": "catalogued scenario: " + ", ".join(SCENARIO_NAMES),
    "kind": "study type",
    "delta1": "first-group shift parameter of scenarios 1 and 3",
    "sigma2": "error variance",
    "n": "total sample size per group",
    "reps": "number of replications",
    "full_scale": "use 10000 replications",
    "seed": "root seed",
    "margin": "margin for the rejection rate (default: the true difference)",
}


def _add_field(p: argparse.ArgumentParser, name: str) -> None:
    info = AnalysisConfig.model_fields[name]
    flag = "--" + name.replace("_", "-")
    kw = {"dest": name, "default": None, "help": _HELP.get(name)}
    if info.annotation is bool:
        p.add_argument(flag, action="store_const", const=True, **kw)
        return
    args = getattr(info.annotation, "__args__", ())
    choices = [a for a in args if isinstance(a, str)]
    if choices:
        kw["choices"] = choices
    elif int in args or info.annotation is int:
        kw["type"] = int
    elif float in args or info.annotation is float:
        kw["type"] = float
    p.add_argument(flag, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curveq", description="Similarity of dose-response curves and MEDs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} analysis")
        p.add_argument("--config", dest="config_file", metavar="FILE", help="flat JSON config; flags win")
        fields = _FIELDS[name]
        if name == "simulate":
            p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", help=_HELP["scenario"])
        for f in fields:
            _add_field(p, f)
        _add_field(p, "report")
        _add_field(p, "output_format")
    return parser


# pipelines


def _load(config: AnalysisConfig, inputs):
    if inputs is not None:
        return inputs
    if config.data is None:
        raise ConfigError("no dataset given (use --data)")
    return ingest_dataset(config.data)


def _dose_range(config: AnalysisConfig, ds: tuple[GroupDataset, GroupDataset]) -> DoseRange:
    lo = config.dose_min if config.dose_min is not None else min(float(d.dose_levels[0]) for d in ds)
    hi = config.dose_max if config.dose_max is not None else max(float(d.dose_levels[-1]) for d in ds)
    if not lo < hi:
        raise ConfigError(f"dose range [{lo}, {hi}] is empty")
    return DoseRange(lo, hi, config.grid_points)


def _fits(bundle: ReportBundle, config: AnalysisConfig, ds):
    fits = []
    for key, d, family in zip(("group1", "group2"), ds, config.families):
        f = fit(d, family, variance_divisor=config.variance_divisor)
        bundle.results[key] = rp.fit_section(f)
        if not f.converged:
            raise _Stop("fit", f"fit of {d.label or key} did not converge: {f.message}")
        fits.append(f)
    return fits


class _Stop(Exception):
    def __init__(self, stage, message):
        super().__init__(message)
        self.stage = stage


def _run_analysis(name, config, inputs, bundle):
    ds = _load(config, inputs)
    if name in ("band", "test-curves"):
        if name == "test-curves" and config.delta is None:
            raise ConfigError("test-curves needs --delta")
        dr = _dose_range(config, ds)
    if name == "test-med" and (config.clinical_delta is None or config.eta is None):
        raise ConfigError("test-med needs --clinical-delta and --eta")
    stage = "fit"
    try:
        f1, f2 = _fits(bundle, config, ds)
        if name in ("band", "test-curves"):
            stage = "band"
            b = band(f1, f2, dr, config.alpha, config.placebo_adjusted, quantile=config.quantile)
            bundle.results["band"] = rp.band_section(b)
            bundle.band = band_csv(b)
            if name == "test-curves":
                stage = "test"
                bundle.results["test"] = rp.curve_test_section(test_curves(b, config.delta))
        elif name == "test-med":
            stage = "med"
            r = infer_med(f1, f2, config.clinical_delta, config.eta, config.alpha)
            bundle.results["med"] = rp.med_section(r)
    except _Stop as exc:
        bundle.failure = {"stage": exc.stage, "error": "NonConvergence", "message": str(exc)}
    except (DataFormatError, ConfigError):
        raise
    except (CurveqError, ValueError, ArithmeticError) as exc:
        bundle.failure = {"stage": stage, "error": type(exc).__name__, "message": str(exc)}


def _run_simulate(config, bundle):
    if config.scenario is None:
        raise ConfigError(f"simulate needs a scenario: {', '.join(SCENARIO_NAMES)}")
    s = get_scenario(
        config.scenario,
        delta1=config.delta1,
        sigma2=config.sigma2,
        n=config.n,
        delta_clinical=config.clinical_delta,
        grid_points=config.grid_points,
    )
    if config.kind == "med_diff" and s.delta_clinical is None:
        raise ConfigError(f"{s.name} has no MED; use --clinical-delta or kind curve_max_diff")
    reps = run_replications(
        s,
        config.replications,
        config.kind,
        alphas=(config.alpha,),
        seed=config.seed,
        quantile=config.quantile,
        placebo_adjusted=config.placebo_adjusted,
    )
    truth = reps.truth()
    margin = config.margin
    if margin is None:
        margin = truth if config.kind == "curve_max_diff" else abs(truth)
    cov = reps.coverage(config.alpha)
    rej = reps.rejection_rate(config.alpha, margin)
    # the null hypothesis of non-similarity holds when the truth is at least the margin
    null_true = (truth if config.kind == "curve_max_diff" else abs(truth)) >= margin
    bundle.results["scenario"] = cov.config
    bundle.results["coverage"] = {"estimate": cov.estimate, "mc_se": cov.mc_se}
    bundle.results["rejection"] = {
        "estimate": rej.estimate,
        "mc_se": rej.mc_se,
        "margin": margin,
        "measures": "size" if null_true else "power",
    }
    bundle.results["replications"] = {
        "requested": reps.replications,
        "valid": reps.valid,
        "failed": reps.failed,
        "failures": reps.failures,
        "seed": reps.seed,
        "alpha": config.alpha,
        "truth": truth,
    }


def run_subcommand(name: str, config: AnalysisConfig, inputs=None) -> ReportBundle:
    """Run one subcommand and collect its report.

    ``inputs`` optionally supplies the two datasets directly instead of
    reading ``config.data``.  Configuration and data errors propagate as
    exceptions; numerical failures are recorded in ``bundle.failure``.
    """
    if name not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {name!r}")
    echo = {k: getattr(config, k) for k in _FIELDS[name]}
    if name == "simulate":
        echo["replications"] = config.replications
    bundle = ReportBundle(command=name, config=echo)
    if name == "simulate":
        _run_simulate(config, bundle)
    else:
        _run_analysis(name, config, inputs, bundle)
    return bundle


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    name = args.pop("command")
    config_file = args.pop("config_file")
    pos = args.pop("scenario_pos", None)
    if pos is not None:
        if args.get("scenario") not in (None, pos):
            parser.error(f"scenario given twice: {pos!r} and {args['scenario']!r}")
        args["scenario"] = pos
    try:
        file_values = load_config_file(config_file) if config_file else {}
        config = build_config(file_values, args)
        bundle = run_subcommand(name, config)
    except (ConfigError, DataFormatError) as exc:
        print(f"curveq {name}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CurveqError as exc:
        print(f"curveq {name}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if config.report:
        Path(config.report).write_text(bundle.machine_text(), encoding="utf-8")
    if config.band_csv and bundle.band is not None:
        Path(config.band_csv).write_text(bundle.band, encoding="utf-8")
    sys.stdout.write(bundle.machine_text() if config.output_format == "json" else bundle.human())
    if not bundle.ok:
        print(f"curveq {name}: numerical failure: {bundle.failure['message']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
