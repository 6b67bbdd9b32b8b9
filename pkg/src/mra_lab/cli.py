"""Command-line entry point.

Subcommands: sample, estimate, fisher, verify-geometry, rates, version.
Configuration is file-first; flags only override scalars.  Exit codes:
0 success, 1 failed verification checks, 2 config/schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigInvalidError, MRALabError
from .fisher import check_null_space_match, fisher_mc, geometry_checks
from .groups import ELEMENT_ORDER_CONVENTION, group_from_config
from .mle import FitConfig, fit
from .model import (
    MixtureModel,
    load_binary,
    load_csv,
    sample,
    save_binary,
    save_csv,
)
from .randomness import stream
from .rates import RateConfig, run, save_records_csv, save_summary_json
from .report import save_rate_figure
from .stabilizer import stabilizer
from .version import __version__, version_string

__all__ = ["main"]

# Stream purpose tags; the rates harness derives its own (n, trial) paths.
_TAG_SAMPLE = 10
_TAG_ESTIMATE = 11
_TAG_FISHER = 12
_TAG_GEOMETRY = 13

_BINARY_SUFFIXES = {".bin", ".mra1"}


def _echo(resolved: dict) -> None:
    print(
        f"resolved config (seed {resolved['seed']}): "
        + json.dumps(resolved, sort_keys=True),
        file=sys.stderr,
    )


def _resolved(args) -> dict:
    resolved = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        resolved["seed"] = args.seed
    _echo(resolved)
    return resolved


def _model_from(resolved: dict) -> MixtureModel:
    group = group_from_config(resolved["group"])
    return MixtureModel(group, np.asarray(resolved["theta_star"], dtype=np.float64))


def _fit_config(resolved: dict) -> FitConfig:
    est = resolved["estimate"]
    return FitConfig(
        n_restarts=est["restarts"],
        max_iter=est["max_iter"],
        rel_tol=est["rel_tol"],
        polish=est["polish"],
    )


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="ascii")
    sys.stdout.write(text)


def _cmd_sample(args) -> int:
    resolved = _resolved(args)
    if "sample" not in resolved:
        raise ConfigInvalidError("sample command requires a 'sample' block in the config")
    model = _model_from(resolved)
    n = resolved["sample"]["n"]
    data = sample(
        model,
        n,
        stream(resolved["seed"], _TAG_SAMPLE),
        provenance={"master_seed": resolved["seed"], "stream": [_TAG_SAMPLE]},
    )
    out = Path(args.out)
    if out.suffix in _BINARY_SUFFIXES:
        save_binary(data, out)
    else:
        save_csv(data, out)
    print(f"wrote {n} x {model.dim} dataset to {out}", file=sys.stderr)
    return 0


def _cmd_estimate(args) -> int:
    resolved = _resolved(args)
    path = Path(args.data)
    data = load_binary(path) if path.suffix in _BINARY_SUFFIXES else load_csv(path)
    group = group_from_config(resolved["group"])
    result = fit(group, data, _fit_config(resolved), stream(resolved["seed"], _TAG_ESTIMATE))
    doc = result.to_json_dict()
    doc["config"] = resolved
    _emit(doc, args.out)
    return 0


def _cmd_fisher(args) -> int:
    resolved = _resolved(args)
    model = _model_from(resolved)
    report = stabilizer(model.group, model.theta)
    estimate = fisher_mc(
        model, resolved["fisher"]["n_mc"], stream(resolved["seed"], _TAG_FISHER)
    )
    match = check_null_space_match(estimate, report)
    _emit(
        {
            "config": resolved,
            "fisher": estimate.to_json_dict(),
            "stabilizer": report.to_json_dict(),
            "null_space_match": match.to_json_dict(),
        },
        args.out,
    )
    return 0


def _cmd_verify_geometry(args) -> int:
    resolved = _resolved(args)
    model = _model_from(resolved)
    report = stabilizer(model.group, model.theta)
    suite = geometry_checks(
        model, report, resolved["fisher"]["n_mc"], stream(resolved["seed"], _TAG_GEOMETRY)
    )
    doc = suite.to_json_dict()
    doc["config"] = resolved
    _emit(doc, args.out)
    if not suite.passed:
        failed = [c.name for c in suite.checks if not c.passed]
        print(f"failed checks: {failed}", file=sys.stderr)
        return 1
    return 0


def _cmd_rates(args) -> int:
    resolved = _resolved(args)
    if "rates" not in resolved:
        raise ConfigInvalidError("rates command requires a 'rates' block in the config")
    block = resolved["rates"]
    config = RateConfig(
        group=resolved["group"],
        theta_star=tuple(resolved["theta_star"]),
        n_grid=tuple(block["n_grid"]),
        trials=block["trials"],
        mle=_fit_config(resolved),
        master_seed=resolved["seed"],
        quantile=block["quantile"],
    )
    result = run(config, workers=args.workers)
    stem = Path(args.out)
    if stem.suffix:
        stem = stem.with_suffix("")
    csv_path = stem.with_suffix(".csv")
    save_records_csv(result, csv_path)
    save_summary_json(result, stem.with_suffix(".json"))
    save_rate_figure(result, stem.with_suffix(".png"))
    print(
        f"wrote {csv_path}, {stem.with_suffix('.json')}, {stem.with_suffix('.png')}",
        file=sys.stderr,
    )
    return 0


def _cmd_version(args) -> int:
    _emit(
        {
            "name": "mra-lab",
            "version": __version__,
            "element_order": ELEMENT_ORDER_CONVENTION,
            "version_string": version_string(),
        },
        getattr(args, "out", None),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mra-lab",
        description="Likelihood geometry and estimation-rate experiments for "
        "group-invariant Gaussian mixtures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p, needs_out=False):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if needs_out:
            p.add_argument("--out", required=True, help="output path")
        else:
            p.add_argument("--out", default=None, help="also write the JSON output here")

    p = sub.add_parser("sample", help="draw a dataset and write it to CSV or binary")
    _common(p, needs_out=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="fit the MLE to a dataset file")
    _common(p)
    p.add_argument("--data", required=True, help="dataset file (.csv, .bin or .mra1)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fisher", help="Monte Carlo Fisher information and null-space match")
    _common(p)
    p.set_defaults(func=_cmd_fisher)

    p = sub.add_parser("verify-geometry", help="run the population identity check suite")
    _common(p)
    p.set_defaults(func=_cmd_verify_geometry)

    p = sub.add_parser("rates", help="run the rate experiment; writes CSV, JSON and PNG")
    _common(p, needs_out=True)
    p.add_argument("--workers", type=int, default=None, help="parallel worker count")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("version", help="print version and ordering convention")
    p.set_defaults(func=_cmd_version)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalidError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MRALabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
