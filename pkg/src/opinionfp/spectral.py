"""Semi-implicit pseudo-spectral solver for the mean-field equation.

The physical grid has exactly 2*N_f nodes on [-1, 1) so the set of resolved
frequencies matches the Fourier ODE truncation. Each step forms the force
field in mode space, takes the product rho*G in physical space and treats the
diffusion implicitly; the mass mode is carried over unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    BlowUpError,
    ConfigurationError,
    GridDensity,
    ModelParams,
    RadicalDensity,
    cosine_analyze,
    cosine_synthesize,
    radical_grid,
)
from .fourier_ode import DEFAULT_DT, DEFAULT_NF, _step_indices, f_coeff

log = logging.getLogger(__name__)


def _even(values: np.ndarray) -> np.ndarray:
    # copy x in (0, 1) onto x in (-1, 0)
    n2 = values.size
    N = n2 // 2
    out = values.copy()
    out[1:N] = values[n2 - np.arange(1, N)]
    return out


def radical_modes(rd: RadicalDensity | None, N_f: int, method: str = "sampled") -> np.ndarray:
    """rfft-normalised modes of the evenly extended radical density on 2*N_f nodes.

    ``sampled`` samples the triangular density on the grid and transforms it;
    ``analytic`` uses the exact cosine coefficients truncated at N_f.
    """
    if rd is None:
        return np.zeros(N_f + 1, dtype=complex)
    if method == "sampled":
        return np.fft.rfft(radical_grid(rd, N_f).values) / (2 * N_f)
    if method == "analytic":
        q = rd.coeffs(N_f).astype(complex)
        k = np.arange(N_f + 1)
        # node 0 sits at x = -1: rfft picks up (-1)^k; cos -> half amplitude per side
        modes = 0.5 * q * np.where(k % 2, -1.0, 1.0)
        modes[0] = q[0]
        modes[N_f] *= 2.0
        return modes
    raise ConfigurationError(f"unknown radical mode method {method!r}")


def _multipliers(N_f: int, params: ModelParams, dt: float):
    k = np.arange(N_f + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_mult = np.where(k > 0, -2j * params.R / (np.pi * k) * f_coeff(k, params.R), 0.0)
    # the Nyquist sine mode vanishes on the nodes
    g_mult[N_f] = 0.0
    deriv = 1j * np.pi * k
    deriv[N_f] = 0.0
    implicit = 1.0 / (1.0 + dt * 0.5 * np.pi**2 * params.sigma**2 * k**2)
    return g_mult, deriv, implicit


def spectral_step(
    modes: np.ndarray,
    r_modes: np.ndarray,
    params: ModelParams,
    dt: float,
    _cache: tuple | None = None,
) -> np.ndarray:
    """Advance rfft modes (k = 0..N_f, normalised by the node count) by one step."""
    N_f = modes.size - 1
    if not (dt > 0):
        raise ConfigurationError(f"dt must be positive, got {dt}")
    g_mult, deriv, implicit = _cache or _multipliers(N_f, params, dt)
    n2 = 2 * N_f
    rho = _even(np.fft.irfft(modes * n2, n=n2))
    rho_hat = np.fft.rfft(rho) / n2
    G = np.fft.irfft(g_mult * (rho_hat + params.M * r_modes) * n2, n=n2)
    h_hat = np.fft.rfft(rho * G) / n2
    new = (rho_hat + dt * deriv * h_hat) * implicit
    new[0] = rho_hat[0]
    return new


@dataclass
class GridTrajectory:
    t: np.ndarray
    values: np.ndarray  # (n_samples, 2 * N_f)
    max_negativity: float = 0.0

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> GridDensity:
        return GridDensity(self.values[i].copy())

    @property
    def final(self) -> GridDensity:
        return self[-1]


def _resample(g: GridDensity, N_f: int) -> GridDensity:
    if g.N_g == N_f:
        return GridDensity(g.values.copy())
    return cosine_synthesize(cosine_analyze(g, min(N_f, g.N_g - 1)), N_f)


def spectral_run(
    initial: GridDensity,
    rd: RadicalDensity | None,
    params: ModelParams,
    t_end: float,
    dt: float = DEFAULT_DT,
    N_f: int = DEFAULT_NF,
    t_eval=None,
    radical_method: str = "sampled",
) -> GridTrajectory:
    """Integrate from ``initial`` and sample the density at ``t_eval``.

    Transient negative values from spectral ringing are kept (not clipped);
    their worst depth is reported as ``max_negativity``.
    """
    mass = initial.integral()
    if abs(mass - 1.0) > 1e-6:
        raise ConfigurationError(f"initial density must have unit mass, got {mass:.8f}")
    if params.M > 0 and rd is None:
        raise ConfigurationError("M > 0 requires a radical density")
    n_steps, idx = _step_indices(t_end, dt, t_eval)
    rho0 = _even(_resample(initial.symmetrize(), N_f).values)
    modes = np.fft.rfft(rho0) / (2 * N_f)
    r_modes = radical_modes(rd, N_f, radical_method)
    cache = _multipliers(N_f, params, dt)

    out = np.empty((idx.size, 2 * N_f))
    k_out = 0
    neg = max(0.0, -float(rho0.min()))
    if idx[0] == 0:
        out[0] = rho0
        k_out = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            modes = spectral_step(modes, r_modes, params, dt, cache)
            if not np.all(np.isfinite(modes)):
                raise BlowUpError(
                    f"pseudo-spectral state became non-finite at step {step} (t={step * dt:.6g})",
                    t=step * dt, step=step,
                )
            if k_out < idx.size and step == idx[k_out]:
                rho = _even(np.fft.irfft(modes * 2 * N_f, n=2 * N_f))
                out[k_out] = rho
                neg = max(neg, -float(rho.min()))
                k_out += 1
    if neg > 0:
        log.info("pseudo-spectral run reached negative density %.3e", neg)
    return GridTrajectory(idx * dt, out, neg)
