import csv
import glob
import os
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evodyn import cli
from evodyn import config as cfg
from evodyn.errors import ValidationError
from evodyn.runners import (run_classify, run_convergence, run_ergodic, run_paths, run_region_map,
                            run_switching)

import oracles

ROOT = os.path.dirname(os.path.dirname(__file__))
CONFIGS = sorted(glob.glob(os.path.join(ROOT, "configs", "*.toml")))

MARKET = """
[model]
mu = [0.5, 0.5]
a = [0.0, 0.0]
sigma = [[{s}, -{s}], [-{s}, {s}]]
"""


def _conf(kind, sigma2=0.125, b=None, numeric="", extra=""):
    text = f'kind = "{kind}"\n' + MARKET.format(s=sigma2) + extra
    if b is not None:
        text += f"\n[strategy]\nb = {b}\n"
    if numeric:
        text += "\n[numeric]\n" + textwrap.dedent(numeric)
    return cfg.loads(text)


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# config


@pytest.mark.parametrize("path", CONFIGS, ids=os.path.basename)
def test_shipped_configs_round_trip(path):
    c = cfg.load(path)
    text = cfg.dumps(c)
    again = cfg.loads(text)
    assert again == c
    assert cfg.dumps(again) == text


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1.0, 1e5), st.integers(0, 2**31), st.integers(1, 1000))
def test_canonical_form_is_idempotent(dt, T, seed, paths):
    c = _conf("paths", b="[[-0.5, 0.5], [1.0, -1.0]]",
              numeric=f"dt = {dt!r}\nT = {T!r}\nseed = {seed}\npaths = {paths}\n")
    text = cfg.dumps(c)
    assert cfg.dumps(cfg.loads(text)) == text
    assert cfg.loads(text).numeric["dt"] == dt


def test_scientific_notation_and_defaults():
    c = _conf("ergodic", b="[[-0.5, 0.5], [1.0, -1.0]]", numeric="T = 2e4\n")
    assert c.numeric["T"] == 20000.0 and c.numeric["dt"] == 1e-3 and c.numeric["paths"] == 64


def test_physical_parameters_have_no_defaults():
    with pytest.raises(ValidationError) as exc:
        cfg.loads('kind = "paths"\n[model]\nmu = [0.5, 0.5]\n')
    msgs = " ".join(exc.value.violations)
    assert "model.a" in msgs and "model.sigma" in msgs and "strategy.b" in msgs


def test_bad_kind_and_types():
    with pytest.raises(ValidationError):
        cfg.loads('kind = "nope"\n[model]\n')
    with pytest.raises(ValidationError):
        _conf("paths", b="[[-0.5, 0.5], [1.0, -1.0]]", numeric='paths = 2.5\n')
    with pytest.raises(ValidationError):
        _conf("paths", b="[[-0.5, 0.5], [1.0, -1.0]]", numeric='scheme = "rk4"\n')
    with pytest.raises(ValidationError):
        cfg.loads("kind = = 3")


def test_overrides_replace_numeric_values():
    c = _conf("paths", b="[[-0.5, 0.5], [1.0, -1.0]]")
    d = c.with_overrides(seed=5, dt=None, T=3.0)
    assert d.numeric["seed"] == 5 and d.numeric["T"] == 3.0 and d.numeric["dt"] == c.numeric["dt"]
    assert d.sha256() != c.sha256()


# ---------------------------------------------------------------------------
# runners


def test_region_map_complete_market(tmp_path):
    c = _conf("region_map", sigma2=0.25, numeric="grid = 25\n")
    rows = _read(run_region_map(c, tmp_path)[0])
    assert len(rows) == 625
    labels = {r["class"] for r in rows}
    assert {"1D", "2D", "C"} <= labels
    # no survival region: "S" only on the separating lines |b1| = |b2|, where theta0 = theta1 = 0
    for r in rows:
        if r["class"] == "S":
            assert abs(abs(float(r["b1"])) - abs(float(r["b2"]))) < 1e-12
    for r in rows:
        b1, b2 = float(r["b1"]), float(r["b2"])
        assert r["class"] == oracles.region_label(0.25, 0.0, b1, b2)


def test_region_map_section_five(tmp_path):
    c = _conf("region_map", numeric="grid = 9\nb1_range = [-1.0, 1.0]\nb2_range = [-1.0, 1.0]\n")
    rows = {(float(r["b1"]), float(r["b2"])): r for r in _read(run_region_map(c, tmp_path)[0])}
    assert rows[(1.0, -1.0)]["class"] == "S"
    assert rows[(1.0, 0.0)]["class"] == "2D"
    assert float(rows[(1.0, -1.0)]["theta0"]) == 4.0
    for (b1, b2), r in rows.items():
        assert r["class"] == oracles.region_label(0.125, 0.0, b1, b2)


def test_paths_three_regimes_same_noise(tmp_path):
    ends = {}
    for b1 in (-0.25, -1 / 3, -0.5):
        c = _conf("paths", b=f"[[{b1!r}, {-b1!r}], [1.0, -1.0]]",
                  numeric="T = 50.0\nseed = 7\npaths = 1\n")
        out = tmp_path / str(b1)
        rows = _read(run_paths(c, out)[0])
        assert list(rows[0]) == ["t", "y1"]
        ends[b1] = np.array([float(r["y1"]) for r in rows])
    assert ends[-0.25][-1] > 0.99
    assert ends[-0.5].min() > 0 and ends[-0.5].max() < 1
    # same Brownian path: the shares are ordered by the strength of agent 1
    assert np.all(ends[-0.25] >= ends[-1 / 3] - 1e-12) and np.all(ends[-1 / 3] >= ends[-0.5] - 1e-12)


@pytest.mark.parametrize("scheme", ["euler", "milstein", "multi", "discrete"])
def test_paths_all_schemes(tmp_path, scheme):
    c = _conf("paths", b="[[-0.5, 0.5], [1.0, -1.0]]",
              numeric=f'T = 1.0\nscheme = "{scheme}"\npaths = 2\nstride = 10\ndelta = 1e-3\n')
    files = run_paths(c, tmp_path)
    assert [os.path.basename(f) for f in files] == ["path_000.csv", "path_001.csv", "manifest.txt"]
    rows = _read(files[0])
    assert float(rows[0]["y1"]) == 0.5


def test_ergodic_uniform_synthetic(tmp_path):
    c = cfg.loads(textwrap.dedent("""
        kind = "ergodic"
        [model.two_agent]
        theta0 = 1.0
        theta1 = -1.0
        v2 = 2.0
        [numeric]
        paths = 2
        T = 2e4
        nbins = 2000
        seed = 3
    """))
    files = run_ergodic(c, tmp_path)
    summary = {r["statistic"]: float(r["value"]) for r in _read(files[2])}
    assert summary["alpha"] == 1.0 and summary["beta"] == 1.0
    assert summary["sup_cdf_distance"] < 0.01
    dens = _read(files[1])
    ref = np.array([float(r["beta"]) for r in dens])
    np.testing.assert_allclose(ref[(ref > 0)], 1.0, rtol=1e-12)


def test_ergodic_refuses_null_recurrent(tmp_path):
    c = _conf("ergodic", b="[[-0.3333333333333333, 0.3333333333333333], [1.0, -1.0]]")
    c = c.with_overrides(T=10.0)
    from evodyn.errors import RefusalError
    with pytest.raises(RefusalError, match="infinite mass") as exc:
        run_ergodic(c, tmp_path)
    assert exc.value.classification.behavior.value == "null-recurrent"


def test_convergence_identical_strategies(tmp_path):
    c = _conf("convergence", b="[[0.3, -0.3], [0.3, -0.3]]",
              numeric="T = 1.0\ndeltas = [1e-2, 1e-3]\nenergy_paths = 20\nchar_paths = 1\n"
                      'families = ["moment-matched"]\n')
    rows = _read(run_convergence(c, tmp_path)[0])
    assert len(rows) == 2
    for r in rows:
        assert float(r["b_residual"]) < 1e-14 and float(r["c_residual"]) < 1e-14


def test_switching_report_csv(tmp_path):
    c = cfg.load(os.path.join(ROOT, "configs", "switching.toml")).with_overrides(paths=3, T=5.0)
    files = run_switching(c, tmp_path)
    rep = {r["key"]: r["value"] for r in _read(files[0])}
    assert abs(float(rep["theta_bar1"]) - 35 / 32) < 1e-12
    assert rep["class"] == "dominates"
    term = _read(files[-2])
    assert len(term) == 3 and list(term[0]) == ["path", "y1", "z", "occupation1", "jumps"]


def test_classify_runner(tmp_path):
    c = cfg.load(os.path.join(ROOT, "configs", "classify.toml"))
    rows = _read(run_classify(c, tmp_path)[0])
    assert [r["agent"] for r in rows] == ["1", "2", "3"]
    assert rows[0]["outcome"] == "dominates"


def test_floats_round_trip_through_csv(tmp_path):
    c = _conf("region_map", sigma2=0.1, numeric="grid = 7\nb1_range = [-0.3, 0.7]\n")
    rows = _read(run_region_map(c, tmp_path)[0])
    th = [oracles.closed_form_two_asset(0.1, 0.0, float(r["b1"]), float(r["b2"])) for r in rows]
    from evodyn.survival import two_agent_thetas
    from evodyn.model import two_asset_params
    for r in rows:
        b1, b2 = float(r["b1"]), float(r["b2"])
        exact = two_agent_thetas(two_asset_params(0.1), [b1, -b1], [b2, -b2])
        assert float(r["theta0"]) == exact[0] and float(r["theta1"]) == exact[1]
    assert len(th) == 49


def test_manifest_contents(tmp_path):
    c = _conf("region_map", numeric="grid = 3\n")
    files = run_region_map(c, tmp_path)
    text = open(files[-1]).read()
    assert f"config_sha256={c.sha256()}" in text
    assert "seed=0" in text and "numpy=" in text and "evodyn=" in text


# ---------------------------------------------------------------------------
# command line


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return str(p)


def test_cli_success_and_overrides(tmp_path, capsys):
    conf = os.path.join(ROOT, "configs", "paths.toml")
    rc = cli.main(["paths", "--config", conf, "--out", str(tmp_path), "--seed", "9", "--T", "2",
                   "--paths", "2", "--dt", "0.01"])
    assert rc == cli.EXIT_OK
    assert "seed=9" in (tmp_path / "manifest.txt").read_text()
    rows = _read(tmp_path / "path_001.csv")
    assert float(rows[-1]["t"]) == pytest.approx(2.0)


def test_cli_validation_exit(tmp_path):
    bad = _write(tmp_path, 'kind = "classify"\n' + MARKET.format(s=0.3) +
                 "[strategy]\nb = [[0.1, -0.1], [0.2, -0.2]]\n")
    assert cli.main(["classify", "--config", bad, "--out", str(tmp_path / "o")]) == cli.EXIT_VALIDATION
    ok = os.path.join(ROOT, "configs", "paths.toml")
    assert cli.main(["ergodic", "--config", ok, "--out", str(tmp_path / "o")]) == cli.EXIT_VALIDATION


def test_cli_numerical_exit(tmp_path):
    text = textwrap.dedent("""
        kind = "paths"
        [model]
        mu = [0.2, 0.3, 0.5]
        a = [0.1, -0.05, -0.05]
        sigma = [[0.16, -0.06, -0.1], [-0.06, 0.21, -0.15], [-0.1, -0.15, 0.25]]
        [strategy]
        b = [[10.0, -4.0, -6.0], [-8.0, 6.0, 2.0], [2.0, 2.0, -4.0]]
        [numeric]
        scheme = "multi"
        y0 = 0.2
        T = 5.0
        paths = 10
    """)
    rc = cli.main(["paths", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_NUMERICAL


def test_cli_refusal_exit(tmp_path):
    text = 'kind = "ergodic"\n' + MARKET.format(s=0.125) + "[strategy]\nb = [[-0.25, 0.25], [1.0, -1.0]]\n"
    rc = cli.main(["ergodic", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_REFUSAL
