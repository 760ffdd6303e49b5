import numpy as np
import pytest

from evodyn.diffusion import TwoAgentSpec
from evodyn.ergodic import occupation_study


def test_uniform_invariant_law():
    spec = TwoAgentSpec(1.0, -1.0, 2.0)  # Beta(1, 1)
    occ = occupation_study([spec], 0.5, 2e4, 1e-3, 2, seed=3, nbins=2000)[0]
    assert occ.fractions.sum() == pytest.approx(1.0)
    assert occ.sup_cdf_distance(1.0, 1.0) < 0.01
    assert occ.mean == pytest.approx(0.5, abs=0.01)
    assert occ.variance == pytest.approx(1 / 12, abs=0.005)
    assert occ.low_fraction == pytest.approx(0.05, abs=0.005)


def test_shared_noise_across_specs():
    spec = TwoAgentSpec(15 / 4, -3 / 4, 9 / 2)
    a, b = occupation_study([spec, spec], 0.5, 50.0, 1e-3, 3, seed=1, nbins=100)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.terminal_z, b.terminal_z)


def test_burn_in_excludes_steps():
    spec = TwoAgentSpec(1.0, -1.0, 2.0)
    full = occupation_study([spec], 0.5, 10.0, 1e-3, 1, seed=0, burn_in=0.0, nbins=10)[0]
    cut = occupation_study([spec], 0.5, 10.0, 1e-3, 1, seed=0, burn_in=0.5, nbins=10)[0]
    assert full.steps == 10_000 and cut.steps == 5_000


def test_density_integrates_to_bin_mass():
    spec = TwoAgentSpec(15 / 4, -3 / 4, 9 / 2)
    occ = occupation_study([spec], 0.5, 500.0, 1e-3, 1, seed=2, nbins=400)[0]
    y, dens = occ.density()
    widths = np.diff(1 / (1 + np.exp(-occ.edges)))
    assert np.sum(dens * widths) == pytest.approx(occ.fractions[1:-1].sum(), rel=1e-12)
