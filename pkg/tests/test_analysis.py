import numpy as np
import pytest
from scipy import integrate as sint

from opinionfp import analysis
from opinionfp.analysis import (
    cluster_peaks,
    critical_noise,
    initial_clusters,
    linearize_at_uniform,
    order_param_continuum,
    predicted_cluster_count,
)
from opinionfp.core import ConfigurationError, GridDensity, ModelParams, cosine_synthesize
from opinionfp.fourier_ode import build_system, f_coeff, integrate

from oracles import triangle


class TestOrderParamContinuum:
    def test_uniform(self):
        for N_g in (100, 256, 333):
            assert order_param_continuum(GridDensity.uniform(N_g), 0.1) == pytest.approx(0.19, abs=1e-6)

    def test_single_narrow_cluster(self):
        g = GridDensity.from_function(lambda x: triangle(x, 0.5, 0.04), 1024).normalized()
        assert order_param_continuum(g, 0.1) == pytest.approx(1.0, abs=1e-3)

    def test_two_disjoint_clusters(self):
        g = GridDensity.from_function(lambda x: triangle(x, 0.25, 0.04) + triangle(x, 0.75, 0.04), 1024).normalized()
        assert order_param_continuum(g, 0.1) == pytest.approx(0.5, abs=1e-3)

    def test_against_dblquad(self):
        p = np.array([1.0, 0.3, -0.2, 0.1])
        rho = lambda x: p @ np.cos(np.pi * np.arange(4) * x)
        ref, _ = sint.dblquad(lambda y, x: rho(x) * rho(y), 0, 1,
                              lambda x: max(0.0, x - 0.1), lambda x: min(1.0, x + 0.1), epsabs=1e-12)
        assert order_param_continuum(cosine_synthesize(p, 1024), 0.1) == pytest.approx(ref, abs=1e-6)


class TestLinearization:
    def test_no_radicals(self):
        params = ModelParams(R=0.1, sigma=0.02, M=0.0)
        c, B = linearize_at_uniform(params, None, 32)
        n = np.arange(1, 33)
        assert np.all(c == 0)
        np.testing.assert_allclose(B, np.diag(0.2 * f_coeff(n, 0.1) - np.pi**2 * 0.0004 * n**2 / 2))

    def test_diagonal_monotone_in_sigma(self, rd):
        diags = [np.diag(linearize_at_uniform(ModelParams(sigma=s), rd, 64)[1]) for s in (0.01, 0.02, 0.03)]
        assert np.all(np.diff(np.array(diags), axis=0) < 0)

    def test_fixture_entry(self, rd, fixture_params):
        _, B = linearize_at_uniform(fixture_params, rd, 128)
        assert B[7, 7] == pytest.approx(0.177, abs=0.002)


class TestCriticalNoise:
    @pytest.mark.parametrize("gamma,expected", [(1.0, 0.043), (0.1, 0.051)])
    def test_values(self, rd, gamma, expected):
        res = critical_noise(0.1, 0.1, rd, gamma)
        assert not res.unbounded
        assert res.sigma_c == pytest.approx(expected, abs=0.002)
        assert res.energy < gamma

    def test_no_radicals_only_stability_binds(self):
        # smallest sigma with 2 R f_n < pi^2 sigma^2 n^2 / 2 for all n
        n = np.arange(1, 129)
        exact = np.sqrt(np.max(4 * 0.1 * f_coeff(n, 0.1) / (np.pi**2 * n**2)))
        res = critical_noise(0.1, 0.0, None, 1.0)
        assert res.sigma_c == pytest.approx(exact, abs=1e-4)
        assert res.energy == 0.0

    def test_monotone_in_mass(self, rd):
        for gamma in (1.0, 0.1):
            sc = [critical_noise(0.1, M, rd, gamma, N_f=64).sigma_c for M in np.arange(1, 11) / 10]
            assert np.all(np.diff(sc) >= 0)

    def test_unbounded(self, rd):
        res = critical_noise(0.1, 1.0, rd, 1e-12, N_f=16)
        assert res.unbounded and res.sigma_c == np.inf

    def test_rejects_bad_threshold(self, rd):
        with pytest.raises(ConfigurationError):
            critical_noise(0.1, 0.1, rd, 0.0)


class TestInitialClusters:
    def test_fixture(self, rd, fixture_params):
        rep = initial_clusters(fixture_params, rd, 128)
        assert rep.n_star == 8
        assert rep.gamma_star == pytest.approx(0.177, abs=0.002)
        assert rep.c_star == pytest.approx(0.0074, abs=0.0005)
        assert rep.n_clu == 5
        assert rep.t_clu == pytest.approx(18.16, abs=0.1)

    def test_no_radicals_bruteforce_argmax(self):
        n = np.arange(1, 129)
        gamma = 0.2 * f_coeff(n, 0.1) - np.pi**2 * 1e-4 * n**2 / 2
        rep = initial_clusters(ModelParams(R=0.1, sigma=0.01, M=0.0), None, 128)
        assert rep.n_star == n[np.argmax(gamma)] == 8
        assert not rep.t_clu_defined and np.isnan(rep.t_clu)
        assert rep.n_clu == 4

    def test_stable_gives_none(self, rd):
        assert initial_clusters(ModelParams(sigma=0.2), rd, 64) is None

    def test_count_rule(self):
        assert predicted_cluster_count(1, -0.1) == 1
        assert predicted_cluster_count(8, 0.1) == 5
        assert predicted_cluster_count(8, -0.1) == 4
        assert predicted_cluster_count(7, -0.1) == 4

    def test_ties_go_to_smaller_mode(self, monkeypatch, fixture_params):
        B = np.diag([0.1, 0.3, 0.3, 0.2])
        c = np.array([0.0, 0.01, -0.01, 0.0])
        monkeypatch.setattr(analysis, "linearize_at_uniform", lambda *a: (c, B))
        assert initial_clusters(fixture_params, None, 4).n_star == 2

    @pytest.mark.xfail(strict=True, reason="mode 7 is forced three times harder (|c_7| = 0.024) at a nearly "
                       "equal growth rate, so it outgrows mode 8 by t_clu in both the linear and nonlinear runs")
    def test_dominant_mode_in_nonlinear_run(self, rd, fixture_params):
        rep = initial_clusters(fixture_params, rd, 128)
        traj = integrate(build_system(fixture_params, rd, 128), None, 20.0, 0.01, [rep.t_clu])
        assert np.argmax(np.abs(traj.p[-1, 1:])) + 1 == rep.n_star


def _envelope_ratio(rd, sigma):
    params = ModelParams(sigma=sigma)
    c, B = linearize_at_uniform(params, rd, 128)
    p_bar = np.linalg.solve(B, -c)
    traj = integrate(build_system(params, rd, 128), None, 1000.0, 0.01, np.arange(0, 1001, 5))
    return np.linalg.norm(traj.p[:, 1:], axis=1).max() / np.linalg.norm(p_bar)


@pytest.mark.parametrize("gamma", [
    0.1,
    pytest.param(1.0, marks=pytest.mark.xfail(strict=True, reason="at 1.05 sigma_c the transient overshoots "
                                              "to about 3.7 times the linear equilibrium norm")),
])
def test_disorder_persists_above_critical_noise(rd, gamma):
    sigma = 1.05 * critical_noise(0.1, 0.1, rd, gamma).sigma_c
    assert _envelope_ratio(rd, sigma) <= 2.0


@pytest.mark.xfail(strict=True, reason="below sigma_c the linear equilibrium is already large, and the "
                   "nonlinear run stays within 1.3 to 1.5 times its norm")
@pytest.mark.parametrize("gamma", [1.0, 0.1])
def test_order_emerges_below_critical_noise(rd, gamma):
    sigma = 0.95 * critical_noise(0.1, 0.1, rd, gamma).sigma_c
    assert _envelope_ratio(rd, sigma) > 2.0


def test_order_parameter_counts_clusters(rd, fixture_params):
    traj = integrate(build_system(fixture_params, rd, 128), None, 200.0, 0.01, [50.0, 200.0])
    for i in range(2):
        g = traj.grid(i)
        n_peaks = cluster_peaks(g)[0].size
        assert 1.0 / order_param_continuum(g, 0.1) == pytest.approx(n_peaks, rel=0.2)


def test_cluster_peaks_boundary():
    g = GridDensity.from_function(lambda x: 1 + 0.5 * np.cos(2 * np.pi * x), 64)
    xs, hs = cluster_peaks(g)
    np.testing.assert_allclose(xs, [0.0, 1.0])
    np.testing.assert_allclose(hs, [1.5, 1.5])
