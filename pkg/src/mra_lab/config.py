"""Experiment configuration schema: strict validation with defaults.

Unknown keys are rejected everywhere so that a typo in a config file fails
loudly instead of silently running with defaults.
"""

from __future__ import annotations

import json

from .errors import ConfigInvalidError
from .groups import GROUP_KINDS

__all__ = ["load_config", "validate_config"]

_TOP_KEYS = {"group", "theta_star", "seed", "sample", "estimate", "fisher", "rates"}
_GROUP_KEYS = {"kind", "d", "elements"}
_SAMPLE_KEYS = {"n"}
_ESTIMATE_KEYS = {"restarts", "max_iter", "rel_tol", "polish"}
_FISHER_KEYS = {"n_mc"}
_RATES_KEYS = {"n_grid", "trials", "quantile"}

ESTIMATE_DEFAULTS = {"restarts": 8, "max_iter": 500, "rel_tol": 1e-10, "polish": False}
FISHER_DEFAULTS = {"n_mc": 200000}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigInvalidError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _as_int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalidError(f"{where} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigInvalidError(f"{where} must be >= {minimum}")
    return value


def _as_number(value, where: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalidError(f"{where} must be a number")
    return float(value)


def validate_config(doc) -> dict:
    """Validate a raw config document and fill in defaults.

    Returns the resolved config; raises ``ConfigInvalidError`` on any
    schema violation.
    """
    if not isinstance(doc, dict):
        raise ConfigInvalidError("config must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    for key in ("group", "theta_star", "seed"):
        if key not in doc:
            raise ConfigInvalidError(f"config is missing required key '{key}'")

    group = doc["group"]
    if not isinstance(group, dict):
        raise ConfigInvalidError("group must be an object")
    _reject_unknown(group, _GROUP_KEYS, "group")
    kind = group.get("kind")
    if kind not in GROUP_KINDS:
        raise ConfigInvalidError(f"group.kind must be one of {list(GROUP_KINDS)}")
    d = _as_int(group.get("d"), "group.d", minimum=1)
    resolved_group = {"kind": kind, "d": d}
    if kind == "custom":
        elements = group.get("elements")
        if not isinstance(elements, list) or not elements:
            raise ConfigInvalidError("custom group requires a nonempty 'elements' list")
        for i, e in enumerate(elements):
            if not isinstance(e, list) or len(e) != d * d:
                raise ConfigInvalidError(
                    f"group.elements[{i}] must be a row-major list of {d * d} numbers"
                )
        resolved_group["elements"] = [[_as_number(x, "group element entry") for x in e] for e in elements]
    elif "elements" in group:
        raise ConfigInvalidError("group.elements is only valid for kind 'custom'")

    theta_star = doc["theta_star"]
    if not isinstance(theta_star, list) or len(theta_star) != d:
        raise ConfigInvalidError(f"theta_star must be a list of {d} numbers")
    theta_star = [_as_number(x, "theta_star entry") for x in theta_star]

    seed = _as_int(doc["seed"], "seed", minimum=0)

    resolved = {
        "group": resolved_group,
        "theta_star": theta_star,
        "seed": seed,
        "estimate": dict(ESTIMATE_DEFAULTS),
        "fisher": dict(FISHER_DEFAULTS),
    }

    if "sample" in doc:
        block = doc["sample"]
        if not isinstance(block, dict):
            raise ConfigInvalidError("sample must be an object")
        _reject_unknown(block, _SAMPLE_KEYS, "sample")
        resolved["sample"] = {"n": _as_int(block.get("n"), "sample.n", minimum=1)}

    if "estimate" in doc:
        block = doc["estimate"]
        if not isinstance(block, dict):
            raise ConfigInvalidError("estimate must be an object")
        _reject_unknown(block, _ESTIMATE_KEYS, "estimate")
        est = resolved["estimate"]
        if "restarts" in block:
            est["restarts"] = _as_int(block["restarts"], "estimate.restarts", minimum=1)
        if "max_iter" in block:
            est["max_iter"] = _as_int(block["max_iter"], "estimate.max_iter", minimum=1)
        if "rel_tol" in block:
            rel_tol = _as_number(block["rel_tol"], "estimate.rel_tol")
            if rel_tol <= 0:
                raise ConfigInvalidError("estimate.rel_tol must be positive")
            est["rel_tol"] = rel_tol
        if "polish" in block:
            if not isinstance(block["polish"], bool):
                raise ConfigInvalidError("estimate.polish must be a boolean")
            est["polish"] = block["polish"]

    if "fisher" in doc:
        block = doc["fisher"]
        if not isinstance(block, dict):
            raise ConfigInvalidError("fisher must be an object")
        _reject_unknown(block, _FISHER_KEYS, "fisher")
        if "n_mc" in block:
            resolved["fisher"]["n_mc"] = _as_int(block["n_mc"], "fisher.n_mc", minimum=1000)

    if "rates" in doc:
        block = doc["rates"]
        if not isinstance(block, dict):
            raise ConfigInvalidError("rates must be an object")
        _reject_unknown(block, _RATES_KEYS, "rates")
        grid = block.get("n_grid")
        if not isinstance(grid, list) or len(grid) < 4:
            raise ConfigInvalidError("rates.n_grid must be a list of at least 4 sample sizes")
        grid = [_as_int(n, "rates.n_grid entry", minimum=1) for n in grid]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigInvalidError("rates.n_grid must be strictly increasing")
        trials = _as_int(block.get("trials"), "rates.trials", minimum=50)
        quantile = _as_number(block.get("quantile", 0.5), "rates.quantile")
        if not (0.0 < quantile < 1.0):
            raise ConfigInvalidError("rates.quantile must be in (0, 1)")
        resolved["rates"] = {"n_grid": grid, "trials": trials, "quantile": quantile}

    return resolved


def load_config(path) -> dict:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigInvalidError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f"config file {path} is not valid JSON: {exc}") from exc
    return validate_config(doc)
