"""Experiment configuration files.

A config is a TOML document with a top-level ``kind`` and four tables::

    kind = "ergodic"

    [model]                      # mu, a, sigma; or g12, g21 and [[model.regimes]];
    mu = [0.5, 0.5]              # or a [model.two_agent] table with theta0, theta1, v2
    a = [0.0, 0.0]
    sigma = [[0.125, -0.125], [-0.125, 0.125]]

    [strategy]
    b = [[-0.5, 0.5], [1.0, -1.0]]

    [numeric]                    # optional; numerical defaults are filled in
    T = 2e4

    [output]
    precision = 17

Physical parameters never have defaults. The canonical form of a config is
the parsed document with every numerical default filled in and keys sorted;
:func:`dumps` writes it and ``loads(dumps(c)) == c``.
"""
from __future__ import annotations

import copy
import hashlib
import sys
from dataclasses import dataclass, field

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError

KINDS = ("region_map", "paths", "ergodic", "convergence", "switching", "classify")
SCHEMES = ("euler", "milstein", "logodds", "multi", "discrete")
FAMILIES = ("moment-matched", "complete")

# numerical defaults per kind; everything physical must be supplied
_COMMON = {"seed": 0}
DEFAULTS = {
    "region_map": {"b1_range": [-3.0, 3.0], "b2_range": [-3.0, 3.0], "grid": 61},
    "paths": {"paths": 1, "dt": 1e-3, "T": 50.0, "y0": 0.5, "scheme": "logodds", "stride": 100,
              "delta": 1e-4, "family": "moment-matched"},
    "ergodic": {"paths": 64, "dt": 1e-3, "T": 2e4, "y0": 0.5, "burn_in": 0.1, "nbins": 8000,
                "z_range": [-40.0, 40.0]},
    "convergence": {"T": 10.0, "y0": 0.5, "deltas": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
                    "families": ["moment-matched", "complete"], "char_paths": 4,
                    "energy_paths": 10000, "ref_dt": 1e-3},
    "switching": {"paths": 200, "dt": 1e-3, "T": 200.0, "y0": 0.5, "stride": 1000, "q0": 0,
                  "scheme": "euler", "splice": True},
    "classify": {},
}
OUTPUT_DEFAULTS = {"precision": 17}
INT_KEYS = {"seed", "paths", "grid", "stride", "nbins", "char_paths", "energy_paths", "q0",
            "precision", "agent"}


@dataclass
class ExperimentConfig:
    kind: str
    model: dict
    strategy: dict = field(default_factory=dict)
    numeric: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "model": self.model, "numeric": self.numeric,
             "output": self.output}
        if self.strategy:
            d["strategy"] = self.strategy
        return _sorted(copy.deepcopy(d))

    def sha256(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Copy with numeric values replaced; ``None`` values are ignored."""
        num = dict(self.numeric)
        for k, v in kw.items():
            if v is not None:
                num[k] = v
        return from_dict({**self.to_dict(), "numeric": num})


def _sorted(x):
    if isinstance(x, dict):
        return {k: _sorted(x[k]) for k in sorted(x)}
    if isinstance(x, list):
        return [_sorted(v) for v in x]
    return x


def _num(x, where, errs):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        errs.append(f"{where}: expected a number, got {x!r}")
        return 0.0
    return float(x)


def _vec(x, where, errs):
    if not isinstance(x, list) or not x:
        errs.append(f"{where}: expected a non-empty list of numbers")
        return []
    return [_num(v, f"{where}[{i}]", errs) for i, v in enumerate(x)]


def _mat(x, where, errs):
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        errs.append(f"{where}: expected a list of rows")
        return []
    return [_vec(r, f"{where}[{i}]", errs) for i, r in enumerate(x)]


def _market(block, where, errs):
    out = {}
    for key, conv in (("mu", _vec), ("a", _vec), ("sigma", _mat)):
        if key not in block:
            errs.append(f"{where}.{key} is required")
        else:
            out[key] = conv(block[key], f"{where}.{key}", errs)
    return out


def _normalize_numeric(kind, numeric, errs):
    num = {**_COMMON, **DEFAULTS[kind], **numeric}
    for k, v in list(num.items()):
        if k in INT_KEYS:
            if isinstance(v, bool) or not isinstance(v, int):
                errs.append(f"numeric.{k}: expected an integer, got {v!r}")
        elif isinstance(v, bool) or isinstance(v, str):
            pass
        elif isinstance(v, (int, float)):
            num[k] = float(v)
        elif isinstance(v, list):
            num[k] = [float(x) if isinstance(x, (int, float)) and not isinstance(x, bool) else x
                      for x in v]
    if "scheme" in num and kind == "paths" and num["scheme"] not in SCHEMES:
        errs.append(f"numeric.scheme must be one of {SCHEMES}, got {num['scheme']!r}")
    if kind == "switching" and num.get("scheme") not in ("euler", "logodds"):
        errs.append("numeric.scheme must be 'euler' or 'logodds' for switching")
    fams = num.get("families", [num.get("family")] if "family" in num else [])
    for f in fams:
        if f not in FAMILIES:
            errs.append(f"unknown payoff family {f!r}; choose from {FAMILIES}")
    for k in ("dt", "T", "delta", "ref_dt"):
        if k in num and isinstance(num[k], float) and not num[k] > 0:
            errs.append(f"numeric.{k} must be positive")
    if "paths" in num and isinstance(num["paths"], int) and num["paths"] < 1:
        errs.append("numeric.paths must be at least 1")
    if "y0" in num and isinstance(num["y0"], float) and not 0 < num["y0"] < 1:
        errs.append("numeric.y0 must lie in (0, 1)")
    return num


def from_dict(doc: dict) -> ExperimentConfig:
    """Check block completeness for the chosen kind and fill numerical defaults."""
    errs = []
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ValidationError([f"kind must be one of {KINDS}, got {kind!r}"])
    unknown = set(doc) - {"kind", "model", "strategy", "numeric", "output"}
    if unknown:
        errs.append(f"unknown top-level keys: {sorted(unknown)}")
    model_in = doc.get("model")
    if not isinstance(model_in, dict):
        raise ValidationError(["[model] table is required"])

    model = {}
    if kind == "switching":
        for g in ("g12", "g21"):
            if g not in model_in:
                errs.append(f"model.{g} is required")
            else:
                model[g] = _num(model_in[g], f"model.{g}", errs)
        regs = model_in.get("regimes")
        if not isinstance(regs, list) or len(regs) != 2:
            errs.append("model.regimes must hold exactly two regime tables")
        else:
            model["regimes"] = [_market(r, f"model.regimes[{i}]", errs) for i, r in enumerate(regs)]
    elif "two_agent" in model_in:
        if kind not in ("paths", "ergodic"):
            errs.append(f"model.two_agent is only accepted by paths and ergodic, not {kind}")
        ta = model_in["two_agent"]
        model["two_agent"] = {k: _num(ta.get(k), f"model.two_agent.{k}", errs)
                              for k in ("theta0", "theta1", "v2")}
    else:
        model = _market(model_in, "model", errs)

    strategy = {}
    needs_b = not ("two_agent" in model)
    if needs_b:
        s = doc.get("strategy")
        if kind == "region_map":
            pass  # the grid supplies the strategies
        elif not isinstance(s, dict) or "b" not in s:
            errs.append("strategy.b is required")
        else:
            strategy["b"] = _mat(s["b"], "strategy.b", errs)
    numeric = _normalize_numeric(kind, dict(doc.get("numeric", {})), errs)
    output = {**OUTPUT_DEFAULTS, **dict(doc.get("output", {}))}
    if not isinstance(output.get("precision"), int) or not 1 <= output["precision"] <= 17:
        errs.append("output.precision must be an integer in [1, 17]")
    if errs:
        raise ValidationError(errs)
    return ExperimentConfig(kind, model, strategy, numeric, output)


def loads(text: str) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([f"config is not valid TOML: {exc}"]) from exc
    return from_dict(doc)


def load(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    return loads(raw.decode("utf-8"))


def dumps(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config.to_dict())
