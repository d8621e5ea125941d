import numpy as np
import pytest

from opinionfp.core import (
    BlowUpError,
    ConfigurationError,
    GridDensity,
    ModelParams,
    RadicalDensity,
    cosine_synthesize,
)
from opinionfp.fourier_ode import build_system, integrate
from opinionfp.spectral import radical_modes, spectral_run, spectral_step


def modes_of(values):
    return np.fft.rfft(values) / values.size


def test_uniform_is_fixed_point():
    g = GridDensity.uniform(32)
    m = modes_of(g.values)
    out = spectral_step(m, np.zeros_like(m), ModelParams(M=0.0, sigma=0.05), 0.01)
    np.testing.assert_allclose(out, m, atol=1e-15)


def test_pure_diffusion_decay():
    # a vanishing confidence range switches the interaction off
    params = ModelParams(R=1e-12, sigma=0.2, M=0.0)
    N_f, dt = 16, 0.01
    p = np.zeros(N_f + 1)
    p[0], p[3], p[5] = 1.0, 0.2, -0.1
    m = modes_of(cosine_synthesize(p, N_f).values)
    out = spectral_step(m, np.zeros_like(m), params, dt)
    k = np.arange(N_f + 1)
    np.testing.assert_allclose(out, m / (1 + dt * np.pi**2 * 0.04 * k**2 / 2), atol=1e-15)


def test_analytic_radical_modes_match_truncated_series(rd):
    N_f = 32
    m = radical_modes(rd, N_f, "analytic")
    values = np.fft.irfft(m * 2 * N_f, n=2 * N_f)
    np.testing.assert_allclose(values, cosine_synthesize(rd.coeffs(N_f), N_f).values, atol=1e-12)


def test_sampled_radical_modes_reproduce_grid(rd):
    m = radical_modes(rd, 64, "sampled")
    x = GridDensity.uniform(64).x
    np.testing.assert_allclose(np.fft.irfft(m * 128, n=128), rd(np.abs(x)), atol=1e-12)
    with pytest.raises(ConfigurationError):
        radical_modes(rd, 8, "nope")


@pytest.fixture(scope="module")
def run():
    rd = RadicalDensity.triangular(0.7, 0.1)
    return spectral_run(GridDensity.uniform(256), rd, ModelParams(sigma=0.03), 20.0, 0.01, 64, np.arange(0, 21))


class TestRun:
    def test_mass(self, run):
        for i in range(len(run)):
            assert run[i].integral() == pytest.approx(1.0, abs=1e-10)

    def test_evenness(self, run):
        assert max(run[i].asymmetry() for i in range(len(run))) < 1e-12

    def test_modes_real(self, run):
        # even real fields have real modes (up to the grid phase)
        for i in range(len(run)):
            assert np.max(np.abs(np.fft.rfft(run.values[i]).imag)) < 1e-10

    def test_mass_mode_constant(self, run):
        m0 = [np.fft.rfft(v)[0].real / v.size for v in run.values]
        assert np.ptp(m0) < 1e-14

    def test_negativity_reported(self, run):
        assert run.max_negativity >= 0.0


def test_stays_uniform_without_radicals():
    traj = spectral_run(GridDensity.uniform(32), None, ModelParams(M=0.0, sigma=0.3), 5.0, 0.01, 32)
    np.testing.assert_allclose(traj.final.values, 1.0, atol=1e-14)


def test_time_step_self_convergence(rd):
    params = ModelParams(sigma=0.03)
    a = spectral_run(GridDensity.uniform(128), rd, params, 10.0, 0.01, 64).final
    b = spectral_run(GridDensity.uniform(128), rd, params, 10.0, 0.005, 64).final
    assert np.max(np.abs(a.values - b.values)) < 1e-3


def test_agrees_with_fourier_ode_when_resolved(rd):
    # at N_f = 64 the product aliasing is small enough for the two solvers to agree
    params = ModelParams(sigma=0.03)
    ps = spectral_run(GridDensity.uniform(64), rd, params, 400.0, 0.01, 64).final
    ode = integrate(build_system(params, rd, 64), None, 400.0, 0.01).grid(-1, 64)
    assert np.max(np.abs(ps.values - ode.values)) < 0.05


def test_blow_up_diagnostic(rd):
    with pytest.raises(BlowUpError) as info:
        spectral_run(GridDensity.uniform(32), rd, ModelParams(sigma=0.0, M=0.5), 200.0, 1.0, 32)
    assert info.value.step > 0


def test_rejects_non_unit_mass(rd):
    with pytest.raises(ConfigurationError):
        spectral_run(GridDensity(np.full(64, 2.0)), rd, ModelParams(), 1.0, 0.01, 32)
