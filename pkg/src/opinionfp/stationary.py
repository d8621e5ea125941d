"""Stationary densities and the closed-form noise thresholds.

Stationary states are fixed points of

    T rho = exp(-(2 / sigma^2) * int_0^x G_rho(z) dz) / K,

normalised to unit mass on [0, 1]. Norms reported here are taken over the
extended domain [-1, 1] unless a function says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .core import (
    DEFAULT_NG,
    ConfigurationError,
    GridDensity,
    ModelParams,
    RadicalDensity,
    cosine_analyze,
    cosine_synthesize,
    convolve_G,
    l2_norm,
    trapezoid_01,
)
from .fourier_ode import f_coeff


def _potential_spectral(g: GridDensity, rd: RadicalDensity | None, params: ModelParams,
                        n_modes: int | None = None) -> np.ndarray:
    # int_0^x G dz = sum_n a_n (1 - cos(pi n x)) with a_n = 2 R f_n (p_n + M q_n) / (pi n)^2
    N_g = g.N_g
    n_rho = N_g - 1
    n_modes = n_rho if n_modes is None else n_modes
    p = np.zeros(max(n_modes, n_rho) + 1)
    p[: n_rho + 1] = cosine_analyze(g, n_rho).p
    p = p[: n_modes + 1]
    if rd is not None and params.M > 0:
        p = p + params.M * rd.coeffs(n_modes)
    n = np.arange(n_modes + 1)
    a = np.zeros(n_modes + 1)
    a[1:] = 2.0 * params.R * f_coeff(n[1:], params.R) * p[1:] / (np.pi * n[1:]) ** 2
    series = -a
    series[0] = a.sum()
    return cosine_synthesize(series, N_g).values


def _potential_quadrature(g: GridDensity, rd: RadicalDensity | None, params: ModelParams) -> np.ndarray:
    G = convolve_G(g, rd, params)
    N = g.N_g
    half = np.concatenate([G[N:], G[:1]])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (half[1:] + half[:-1]))]) / N
    # potential is even: index j on [-1, 0) mirrors 2N - j
    full = np.empty(2 * N)
    full[N:] = cum[:N]
    full[0] = cum[N]
    full[1:N] = cum[N - np.arange(1, N)]
    return full


def apply_T(
    g: GridDensity,
    rd: RadicalDensity | None,
    params: ModelParams,
    method: str = "spectral",
    n_modes: int | None = None,
) -> GridDensity:
    """One application of the stationary fixed-point operator.

    ``spectral`` integrates the force field term by term from the cosine
    coefficients (exact for band-limited input); ``quadrature`` takes the
    direct-quadrature force field and integrates it by cumulative trapezoid.
    """
    if not (params.sigma > 0):
        raise ConfigurationError("the stationary operator needs sigma > 0")
    if method == "spectral":
        phi = _potential_spectral(g, rd, params, n_modes)
    elif method == "quadrature":
        phi = _potential_quadrature(g, rd, params)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    expo = -2.0 * phi / params.sigma**2
    out = GridDensity(np.exp(expo - expo.max()))
    return out.normalized()


def sup_bound_T(params: ModelParams) -> float:
    return float(np.exp(8.0 * params.R * (1.0 + params.M) / params.sigma**2))


@dataclass
class PicardReport:
    converged: bool
    iterations: int
    residual: float
    residuals: list = field(default_factory=list, repr=False)
    damping: float = 1.0
    lipschitz: float = np.inf


def picard_stationary(
    rd: RadicalDensity | None,
    params: ModelParams,
    tol: float = 1e-10,
    max_iter: int = 1000,
    N_g: int = DEFAULT_NG,
    initial: GridDensity | None = None,
    method: str = "spectral",
    damping: float | None = None,
) -> tuple[GridDensity, PicardReport]:
    """Iterate rho <- T rho from the uniform density until the L2 residual drops below ``tol``.

    With ``damping=None`` the plain iteration is used until the residual
    grows, after which the update is mixed 50/50 with the previous iterate.
    When the iteration budget runs out the best iterate is returned with
    ``converged=False``.
    """
    rho = GridDensity.uniform(N_g) if initial is None else initial
    mix = 1.0 if damping is None else damping
    auto = damping is None
    best, best_res = rho, np.inf
    history = []
    for it in range(1, max_iter + 1):
        t_rho = apply_T(rho, rd, params, method)
        res = l2_norm(t_rho.values - rho.values)
        history.append(res)
        if res < best_res:
            best, best_res = rho, res
        if res < tol:
            return rho, PicardReport(True, it, res, history, mix, lipschitz_const(params, 1))
        if auto and mix == 1.0 and len(history) > 1 and res > history[-2]:
            mix = 0.5
        rho = GridDensity(mix * t_rho.values + (1.0 - mix) * rho.values)
    return best, PicardReport(False, max_iter, best_res, history, mix, lipschitz_const(params, 1))


def lipschitz_const(params: ModelParams, p_norm: float = 1.0) -> float:
    """Lipschitz constant of T in L^p (p in [1, inf))."""
    if not (1.0 <= p_norm < np.inf):
        raise ConfigurationError(f"p_norm must lie in [1, inf), got {p_norm}")
    R, M, s2 = params.R, params.M, params.sigma**2
    if s2 == 0:
        return np.inf
    with np.errstate(over="ignore"):
        return float(0.5 * np.exp(8.0 * R * (1.0 + M) / s2 * (1.0 - 1.0 / p_norm))
                     * np.expm1(16.0 * R / s2))


def uniqueness_threshold(R: float) -> float:
    """sigma^2 above which T is a contraction in L^1."""
    return 16.0 * R / np.log(3.0)


def approx_stationary(A: float, params: ModelParams, N_g: int = DEFAULT_NG) -> GridDensity:
    """Semi-Gaussian single-cluster profile around a concentrated radical mean ``A``."""
    R, M, sigma = params.R, params.M, params.sigma
    if not (R < A < 1.0 - R):
        raise ConfigurationError(
            f"A={A} is within R={R} of the boundary; the even extension's boundary effect invalidates the approximation"
        )
    if not (sigma > 0):
        raise ConfigurationError("approximation needs sigma > 0")

    def profile(x):
        return np.exp(-(M + 1.0) / sigma**2 * np.minimum((x - A) ** 2, R**2))

    return GridDensity.from_function(profile, N_g).normalized()


@dataclass
class StabilityBounds:
    sigma_b_sq: float
    c_b: float
    sigma_s_sq: float
    sigma: float
    eta: float | None
    estimate: float | None

    @property
    def sigma_b(self) -> float:
        return float(np.sqrt(self.sigma_b_sq))

    @property
    def sigma_s(self) -> float:
        return float(np.sqrt(self.sigma_s_sq))

    @property
    def estimate_applicable(self) -> bool:
        return self.eta is not None

    @property
    def exponentially_stable(self) -> bool:
        return self.sigma**2 > self.sigma_s_sq

    def as_dict(self) -> dict:
        return {
            "sigma_b": self.sigma_b, "sigma_b_sq": self.sigma_b_sq, "c_b": self.c_b,
            "sigma_s": self.sigma_s, "sigma_s_sq": self.sigma_s_sq,
            "sigma": self.sigma, "eta": self.eta, "estimate": self.estimate,
            "estimate_applicable": self.estimate_applicable,
            "exponentially_stable": self.exponentially_stable,
        }


def sigma_b_sq(R: float, M: float) -> float:
    return 4.0 * R / np.pi * (M + R / np.sqrt(3.0) + 2.0)


def c_b(R: float, M: float) -> float:
    return 4.0 * R**2 * M / (np.pi * np.sqrt(3.0))


def sigma_s_sq(R: float, M: float, xtol: float = 1e-10) -> float:
    """Unique root of s = 4R(3+M)/pi + 4R^2/(pi sqrt 3) exp(8R(1+M)/s)."""
    lin = 4.0 * R * (3.0 + M) / np.pi
    amp = 4.0 * R**2 / (np.pi * np.sqrt(3.0))
    rate = 8.0 * R * (1.0 + M)

    def g(s):
        return s - lin - amp * np.exp(rate / s)

    lo, hi = lin, 2.0 * lin
    while g(hi) <= 0:
        lo, hi = hi, 2.0 * hi
    return float(bisect(g, lo, hi, xtol=xtol, maxiter=500))


def bounds(params: ModelParams, rd: RadicalDensity | None = None) -> StabilityBounds:
    """Noise thresholds and, when it applies, the closeness-to-uniform estimate.

    The estimate ||rho_s - 1|| <= ||rho_r|| / eta with eta = (sigma^2 - sigma_b^2) / c_b
    is only available for sigma^2 > sigma_b^2 (and M > 0); otherwise ``eta`` is None.
    """
    R, M = params.R, params.M
    sb2, cb = sigma_b_sq(R, M), c_b(R, M)
    ss2 = sigma_s_sq(R, M)
    s2 = params.sigma**2
    eta = est = None
    if s2 > sb2:
        if cb > 0:
            eta = (s2 - sb2) / cb
            if rd is not None:
                est = rd.l2_norm("tilde") / eta
        else:
            eta, est = np.inf, 0.0
    return StabilityBounds(sb2, cb, ss2, params.sigma, eta, est)
