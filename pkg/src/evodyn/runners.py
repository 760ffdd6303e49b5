"""Batch studies behind the ``evodyn`` command.

Each ``run_*`` function takes a validated :class:`ExperimentConfig` and an
output directory, writes its CSV files plus ``manifest.txt``, and returns the
list of files written. Floats are written with ``output.precision``
significant digits (17 by default, enough to round-trip a double).
"""
from __future__ import annotations

import csv
import functools
import math
import os
import platform

import numpy as np
from scipy import stats

from . import __version__
from .config import ExperimentConfig
from .diffusion import (DiffusionSpec, TwoAgentSpec, simulate_log_odds, simulate_multi,
                        simulate_two_agent)
from .discrete import (DiscreteModelSeries, empirical_characteristics,
                       make_complete_market_family, make_moment_matched_family, simulate_discrete)
from .ergodic import occupation_study
from .errors import RefusalError, UnsupportedFamilyError
from .model import MarketParams, StrategyProfile, complete_market_sigma, validate_params
from .paths import logistic, n_steps
from .survival import (Behavior, classify_coefficients, classify_many, classify_two_agent,
                       invariant_density)
from .switching import SwitchingSpec, simulate_switched, switching_report

# path-index offsets keep the sample groups of one study on disjoint streams
_ENERGY_DISCRETE = 100_000
_ENERGY_REFERENCE = 200_000
_ENERGY_FLOOR = 300_000


# ---------------------------------------------------------------------------
# helpers


def _fmt(x, precision):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{precision}g")
    return "" if x is None else str(x)


def _write_csv(path, header, rows, precision):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x, precision) for x in r])
    return path


def _write_manifest(config: ExperimentConfig, out_dir, runner, files):
    import numba
    import scipy

    lines = [
        f"runner={runner}",
        f"config_sha256={config.sha256()}",
        f"seed={config.numeric.get('seed')}",
        f"evodyn={__version__}",
        f"numpy={np.__version__}",
        f"scipy={scipy.__version__}",
        f"numba={numba.__version__}",
        f"python={platform.python_version()}",
    ]
    lines += [f"file={os.path.basename(f)}" for f in files]
    path = os.path.join(out_dir, "manifest.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _runner(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(config: ExperimentConfig, out_dir):
            if config.kind != name:
                raise ValueError(f"config kind {config.kind!r} does not match runner {name!r}")
            os.makedirs(out_dir, exist_ok=True)
            files = fn(config, out_dir)
            return files + [_write_manifest(config, out_dir, name, files)]
        return wrapper
    return deco


def market_params(block) -> MarketParams:
    return MarketParams(block["mu"], block["a"], block["sigma"])


def _validated(config):
    params = market_params(config.model)
    profile = StrategyProfile(config.strategy["b"]) if "b" in config.strategy else None
    validate_params(params, profile).raise_if_invalid()
    return params, profile


def _two_agent(config):
    """``(TwoAgentSpec, SurvivalReport)`` from a market block or a ``two_agent`` block."""
    if "two_agent" in config.model:
        ta = config.model["two_agent"]
        spec = TwoAgentSpec(ta["theta0"], ta["theta1"], ta["v2"])
        return spec, classify_coefficients(spec.theta0, spec.theta1, spec.v2)
    params, profile = _validated(config)
    if profile.n_agents != 2:
        raise UnsupportedFamilyError("this runner needs exactly two agents")
    b1, b2 = profile.b
    return TwoAgentSpec.from_params(params, b1, b2), classify_two_agent(params, b1, b2)


def _family(name, params):
    if name == "moment-matched":
        return make_moment_matched_family(params)
    if name == "complete":
        return make_complete_market_family(params)
    raise UnsupportedFamilyError(f"unknown payoff family {name!r}")


def _family_params(name, params):
    """Market parameters whose diffusion limit the family converges to."""
    if name == "complete":
        return MarketParams(params.mu, params.a, complete_market_sigma(params.mu))
    return params


# ---------------------------------------------------------------------------
# runners


@_runner("region_map")
def run_region_map(config: ExperimentConfig, out_dir):
    """Classification over a grid of scalar strategies ``b = (x, -x)`` for two assets."""
    params, _ = _validated(config)
    if params.n_assets != 2:
        raise UnsupportedFamilyError("region maps need two assets")
    num = config.numeric
    g1 = np.linspace(*num["b1_range"], num["grid"])
    g2 = np.linspace(*num["b2_range"], num["grid"])
    rows = []
    for x1 in g1:
        for x2 in g2:
            r = classify_two_agent(params, [x1, -x1], [x2, -x2])
            rows.append((float(x1), float(x2), r.theta0, r.theta1, r.v2, r.label))
    path = os.path.join(out_dir, "region_map.csv")
    return [_write_csv(path, ["b1", "b2", "theta0", "theta1", "v2", "class"], rows,
                       config.output["precision"])]


@_runner("paths")
def run_paths(config: ExperimentConfig, out_dir):
    """Sample paths of agent 1's share; path ``p`` uses stream ``(seed, p)``."""
    num = config.numeric
    scheme, seed, stride = num["scheme"], num["seed"], num["stride"]
    prec = config.output["precision"]
    files = []
    if scheme in ("euler", "milstein", "logodds"):
        spec, _ = _two_agent(config)
    else:
        params, profile = _validated(config)
        M = profile.n_agents
        y0 = np.full(M, (1.0 - num["y0"]) / (M - 1))
        y0[0] = num["y0"]
        if scheme == "multi":
            dspec = DiffusionSpec.build(params, profile)
        else:
            series = DiscreteModelSeries(params, profile, num["delta"],
                                         _family(num["family"], params)).check()
    for p in range(num["paths"]):
        if scheme in ("euler", "milstein"):
            path = simulate_two_agent(spec, num["y0"], num["T"], num["dt"], seed, stride=stride,
                                      path_index=p, milstein=scheme == "milstein")
        elif scheme == "logodds":
            z0 = math.log(num["y0"] / (1.0 - num["y0"]))
            path = simulate_log_odds(spec, z0, num["T"], num["dt"], seed, stride=stride,
                                     path_index=p).to_wealth()
        elif scheme == "multi":
            path = simulate_multi(dspec, y0, num["T"], num["dt"], seed, stride=stride,
                                  path_index=p)
        else:
            path = simulate_discrete(series, y0, num["T"], seed, stride=stride, path_index=p)
        M = path.states.shape[1]
        cols = ["y1"] if M == 2 else [f"y{m + 1}" for m in range(M)]
        data = path.states[:, :1] if M == 2 else path.states
        rows = (((float(t),) + tuple(float(v) for v in row)) for t, row in zip(path.times, data))
        files.append(_write_csv(os.path.join(out_dir, f"path_{p:03d}.csv"), ["t"] + cols, rows,
                                prec))
    return files


@_runner("ergodic")
def run_ergodic(config: ExperimentConfig, out_dir):
    """Long-run occupation of the share against its Beta invariant law.

    Refuses (:class:`RefusalError`) unless the share is positive recurrent.
    """
    spec, report = _two_agent(config)
    if report.behavior is not Behavior.POSITIVE_RECURRENT:
        if report.behavior is Behavior.NULL_RECURRENT:
            why = "null recurrent: the invariant measure has infinite mass"
        else:
            tag = report.behavior.value if report.behavior else report.outcome.value
            why = f"{report.outcome.value}/{tag}: no invariant law on (0, 1)"
        raise RefusalError(f"ergodic study refused, share is {why}", classification=report)
    num = config.numeric
    prec = config.output["precision"]
    occ = occupation_study([spec], num["y0"], num["T"], num["dt"], num["paths"], num["seed"],
                           burn_in=num["burn_in"], z_range=tuple(num["z_range"]),
                           nbins=num["nbins"])[0]
    alpha, beta = report.beta_params
    ye = logistic(occ.edges)
    ref_cdf = stats.beta.cdf(ye, alpha, beta)
    frac = occ.fractions
    hist_rows = []
    for i in range(len(occ.edges) - 1):
        hist_rows.append((occ.edges[i], occ.edges[i + 1], ye[i], ye[i + 1], frac[i + 1],
                          ref_cdf[i + 1] - ref_cdf[i]))
    y_mid, dens = occ.density()
    inside = (y_mid > 0) & (y_mid < 1)
    ref_dens = np.zeros_like(y_mid)
    ref_dens[inside] = invariant_density(report, y_mid[inside], normalized=True)
    dens_rows = ((float(y), float(d), float(r)) for y, d, r in zip(y_mid, dens, ref_dens))
    ks = occ.sup_cdf_distance(alpha, beta)
    bmean, bvar = stats.beta.stats(alpha, beta, moments="mv")
    summary = [
        ("alpha", alpha), ("beta", beta), ("sup_cdf_distance", ks),
        ("mean", occ.mean), ("beta_mean", float(bmean)),
        ("variance", occ.variance), ("beta_variance", float(bvar)),
        ("low_fraction", occ.low_fraction), ("high_fraction", occ.high_fraction),
        ("underflow_fraction", frac[0]), ("overflow_fraction", frac[-1]),
        ("counted_steps", occ.steps), ("paths", num["paths"]),
    ]
    return [
        _write_csv(os.path.join(out_dir, "histogram.csv"),
                   ["z_lo", "z_hi", "y_lo", "y_hi", "fraction", "beta_fraction"], hist_rows, prec),
        _write_csv(os.path.join(out_dir, "density.csv"), ["y", "empirical", "beta"], dens_rows,
                   prec),
        _write_csv(os.path.join(out_dir, "summary.csv"), ["statistic", "value"], summary, prec),
    ]


def convergence_table(params: MarketParams, profile: StrategyProfile, family_name: str,
                      deltas, horizon: float, y0, seed: int, *, char_paths: int = 4,
                      energy_paths: int = 500, ref_dt: float = 1e-3):
    """Rows ``(delta, b_residual, c_residual, energy_distance, energy_floor)`` for one family.

    Residuals are sup-norm characteristic residuals averaged over
    ``char_paths`` discrete paths. The energy distance compares agent 1's
    terminal share under the discrete model with a diffusion sample of the
    same size; the diffusion sample is shared by every ``delta``.
    ``energy_floor`` is the distance between two independent diffusion
    samples of that size, i.e. the Monte Carlo resolution of the column.
    """
    lim = _family_params(family_name, params)
    family = _family(family_name, lim)
    y0 = np.asarray(y0, dtype=float)
    ref = _reference_terminal(lim, profile, y0, horizon, ref_dt, seed, energy_paths)
    ref2 = _reference_terminal(lim, profile, y0, horizon, ref_dt, seed, energy_paths,
                               offset=_ENERGY_FLOOR)
    floor = float(stats.energy_distance(ref, ref2))
    rows = []
    for delta in deltas:
        series = DiscreteModelSeries(lim, profile, float(delta), family).check()
        bres, cres = [], []
        for p in range(char_paths):
            path = simulate_discrete(series, y0, horizon, seed, path_index=p)
            ch = empirical_characteristics(series, path)
            bres.append(ch.drift_residual())
            cres.append(ch.covariance_residual())
        n = n_steps(horizon, delta)
        term = np.array([simulate_discrete(series, y0, horizon, seed, stride=n,
                                           path_index=_ENERGY_DISCRETE + p).states[-1, 0]
                         for p in range(energy_paths)])
        ed = float(stats.energy_distance(term, ref))
        rows.append((float(delta), float(np.mean(bres)), float(np.mean(cres)), ed, floor))
    return rows


def _reference_terminal(params, profile, y0, horizon, dt, seed, n, offset=_ENERGY_REFERENCE):
    n_st = n_steps(horizon, dt)
    if profile.n_agents == 2:
        spec = TwoAgentSpec.from_params(params, profile.b[0], profile.b[1])
        z0 = math.log(y0[0] / y0[1])
        return np.array([logistic(simulate_log_odds(spec, z0, horizon, dt, seed, stride=n_st,
                                                    path_index=offset + p).z[-1])
                         for p in range(n)])
    dspec = DiffusionSpec.build(params, profile)
    return np.array([simulate_multi(dspec, y0, horizon, dt, seed, stride=n_st,
                                    path_index=offset + p).states[-1, 0]
                     for p in range(n)])


@_runner("convergence")
def run_convergence(config: ExperimentConfig, out_dir):
    """Characteristic residuals and terminal-marginal distance along a grid of ``delta``."""
    params, profile = _validated(config)
    num = config.numeric
    M = profile.n_agents
    y0 = np.full(M, (1.0 - num["y0"]) / (M - 1))
    y0[0] = num["y0"]
    rows = []
    for fam in num["families"]:
        for r in convergence_table(params, profile, fam, num["deltas"], num["T"], y0,
                                   num["seed"], char_paths=num["char_paths"],
                                   energy_paths=num["energy_paths"], ref_dt=num["ref_dt"]):
            rows.append((fam,) + r)
    path = os.path.join(out_dir, "convergence.csv")
    return [_write_csv(path, ["family", "delta", "b_residual", "c_residual", "energy_distance",
                        "energy_floor"],
                       rows, config.output["precision"])]


def switching_spec(config: ExperimentConfig) -> SwitchingSpec:
    m = config.model
    regimes = tuple(market_params(r) for r in m["regimes"])
    b = config.strategy["b"]
    if len(b) != 2:
        raise UnsupportedFamilyError("switching needs exactly two agents")
    return SwitchingSpec(m["g12"], m["g21"], regimes, b[0], b[1])


@_runner("switching")
def run_switching(config: ExperimentConfig, out_dir):
    """Averaged coefficients, the long-run outcome and sample paths under regime switching."""
    spec = switching_spec(config)
    rep = switching_report(spec)
    num = config.numeric
    prec = config.output["precision"]
    rows = [("pi1", rep.pi[0]), ("pi2", rep.pi[1]),
            ("theta_bar0", rep.theta_bar0), ("theta_bar1", rep.theta_bar1)]
    for i, (t0, t1, v2) in enumerate(rep.per_regime, start=1):
        rows += [(f"theta0_{i}", t0), (f"theta1_{i}", t1), (f"v2_{i}", v2)]
    rows.append(("class", rep.classification.value if rep.classification else "unclassified"))
    if rep.note:
        rows.append(("note", rep.note))
    files = [_write_csv(os.path.join(out_dir, "report.csv"), ["key", "value"], rows, prec)]
    term = []
    for p in range(num["paths"]):
        path, chain = simulate_switched(spec, num["y0"], num["T"], num["dt"], num["seed"],
                                        stride=num["stride"], path_index=p, q0=num["q0"],
                                        scheme=num["scheme"], splice=num["splice"])
        reg = path.info["regimes"] + 1
        files.append(_write_csv(os.path.join(out_dir, f"path_{p:03d}.csv"), ["t", "y1", "regime"],
                                zip(path.times.tolist(), path.y1.tolist(), reg.tolist()), prec))
        occ = chain.occupation()
        term.append((p, float(path.y1[-1]), path.info["z_T"], float(occ[0]),
                     len(chain.jump_times)))
    files.append(_write_csv(os.path.join(out_dir, "terminal.csv"),
                            ["path", "y1", "z", "occupation1", "jumps"], term, prec))
    return files


@_runner("classify")
def run_classify(config: ExperimentConfig, out_dir):
    """Coefficients and outcome for every agent of the profile."""
    params, profile = _validated(config)
    rows = []
    for m in range(profile.n_agents):
        r = classify_many(params, profile, agent_index=m)
        rows.append((m + 1, r.theta0, r.theta1, r.v2, r.outcome.value,
                     r.behavior.value if r.behavior else "", r.label, r.positive_limit))
    path = os.path.join(out_dir, "classify.csv")
    return [_write_csv(path, ["agent", "theta0", "theta1", "v2", "outcome", "behavior", "class",
                              "positive_limit"], rows, config.output["precision"])]


RUNNERS = {
    "region_map": run_region_map,
    "paths": run_paths,
    "ergodic": run_ergodic,
    "convergence": run_convergence,
    "switching": run_switching,
    "classify": run_classify,
}


def run(config: ExperimentConfig, out_dir):
    return RUNNERS[config.kind](config, out_dir)
