"""Order-disorder detection, initial-clustering prediction and order parameters."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import find_peaks

from .core import ConfigurationError, GridDensity, ModelParams, RadicalDensity
from .fourier_ode import DEFAULT_NF, linear_terms

log = logging.getLogger(__name__)

SIGMA_SCAN_STEP = 0.005
SIGMA_SCAN_MAX = 0.3
SIGMA_LIMIT = 1.0


def _cumulative(v: np.ndarray, h: float):
    """Exact antiderivative of the piecewise-linear interpolant of ``v`` on [0, 1]."""
    nodes = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
    n_cells = v.size - 1

    def C(y):
        y = np.clip(y, 0.0, 1.0)
        j = np.minimum((y / h).astype(int), n_cells - 1)
        s = y - j * h
        return nodes[j] + v[j] * s + (v[j + 1] - v[j]) * s**2 / (2.0 * h)

    return C


def order_param_continuum(g: GridDensity, R: float) -> float:
    """Q_c = int int rho(x) rho(y) 1{|x - y| <= R} over [0, 1]^2 (no periodic images).

    The density is taken as the piecewise-linear interpolant of its grid values
    on [0, 1]; the double integral is then evaluated exactly by splitting at
    every node and node +- R and applying Simpson's rule (the integrand is cubic
    on each piece).
    """
    v = g.half()
    h = 1.0 / (v.size - 1)
    x = np.linspace(0.0, 1.0, v.size)
    C = _cumulative(v, h)
    cuts = np.concatenate([x, x - R, x + R])
    cuts = np.unique(cuts[(cuts >= 0.0) & (cuts <= 1.0)])

    def integrand(t):
        return np.interp(t, x, v) * (C(t + R) - C(t - R))

    a, b = cuts[:-1], cuts[1:]
    mid = 0.5 * (a + b)
    return float(np.sum((b - a) / 6.0 * (integrand(a) + 4.0 * integrand(mid) + integrand(b))))


def linearize_at_uniform(params: ModelParams, rd: RadicalDensity | None, N_f: int = DEFAULT_NF):
    """(c, B) of the mode equations linearised about the uniform density."""
    return linear_terms(params, rd, N_f)


def _probe(sigma: float, base: np.ndarray, c: np.ndarray, diff: np.ndarray, gamma_threshold: float):
    B = base - sigma**2 * diff
    hurwitz = np.max(np.linalg.eigvals(B).real) < 0.0
    if not hurwitz:
        return False, np.inf
    p_bar = np.linalg.solve(B, -c)
    energy = float(p_bar @ p_bar)
    return energy < gamma_threshold, energy


@dataclass
class CriticalNoise:
    sigma_c: float
    unbounded: bool
    gamma_threshold: float
    energy: float  # ||p_bar||^2 at sigma_c
    probes: int

    def as_dict(self) -> dict:
        return asdict(self)


def critical_noise(
    R: float,
    M: float,
    rd: RadicalDensity | None,
    gamma_threshold: float,
    N_f: int = DEFAULT_NF,
    tol: float = 1e-4,
) -> CriticalNoise:
    """Smallest noise at which the uniform state is linearly stable and the
    linear equilibrium stays within ``||p_bar||^2 < gamma_threshold``.

    A coarse scan at steps of 0.005 brackets the transition, bisection then
    refines it to ``tol``. The scan covers (0.005, 0.3] first and is extended
    up to 1 before reporting ``unbounded``.
    """
    if not (gamma_threshold > 0):
        raise ConfigurationError(f"gamma_threshold must be positive, got {gamma_threshold}")
    # B(sigma) = B(0) - sigma^2 diag(pi^2 n^2 / 2)
    c, base = linear_terms(ModelParams(R=R, sigma=0.0, M=M), rd, N_f)
    diff = np.diag(0.5 * np.pi**2 * np.arange(1, N_f + 1) ** 2)
    probes = 0

    def ok(s):
        nonlocal probes
        probes += 1
        return _probe(s, base, c, diff, gamma_threshold)

    grid = np.round(np.arange(1, int(round(SIGMA_LIMIT / SIGMA_SCAN_STEP)) + 1) * SIGMA_SCAN_STEP, 12)
    lo, hi = 0.0, None
    for s in grid:
        if ok(s)[0]:
            hi = s
            break
        lo = s
    if hi is None:
        return CriticalNoise(np.inf, True, gamma_threshold, np.inf, probes)
    if hi > SIGMA_SCAN_MAX:
        log.info("critical noise lies above the usual scan range (%.3f)", SIGMA_SCAN_MAX)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid)[0]:
            hi = mid
        else:
            lo = mid
    return CriticalNoise(float(hi), False, gamma_threshold, ok(hi)[1], probes)


@dataclass
class ClusterReport:
    n_star: int
    gamma_star: float
    c_star: float
    n_clu: int
    t_clu: float  # nan when c_star == 0
    t_clu_defined: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def predicted_cluster_count(n_star: int, c_star: float) -> int:
    return n_star // 2 + 1 if c_star > 0 else math.ceil(n_star / 2)


def initial_clusters(params: ModelParams, rd: RadicalDensity | None, N_f: int = DEFAULT_NF) -> ClusterReport | None:
    """Dominant unstable mode of the linearisation and the cluster count and onset time it predicts.

    Returns None when no mode grows (no clustering predicted). Ties in the
    growth rate go to the smaller wave number.
    """
    c, B = linearize_at_uniform(params, rd, N_f)
    gamma = np.diag(B)
    if not np.any(gamma > 0):
        return None
    i = int(np.argmax(gamma))
    n_star = i + 1
    g_star, c_star = float(gamma[i]), float(c[i])
    n_clu = predicted_cluster_count(n_star, c_star)
    if c_star == 0.0:
        log.warning("c at the dominant mode vanishes; onset time undefined")
        return ClusterReport(n_star, g_star, c_star, n_clu, math.nan, False)
    t_clu = math.log1p(g_star / abs(c_star)) / g_star
    return ClusterReport(n_star, g_star, c_star, n_clu, t_clu)


def cluster_peaks(g: GridDensity, level: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Locations and heights of the local maxima on [0, 1] that rise above ``level``.

    The profile is mirrored at both ends so boundary clusters at x = 0 and x = 1
    count as maxima. The default level is the uniform density, which discards
    the small ripples that spectral truncation leaves between clusters.
    """
    v = g.half()
    x = g.half_x
    padded = np.concatenate([v[1:2], v, v[-2:-1]])
    idx, _ = find_peaks(padded)
    idx = idx - 1
    idx = idx[v[idx] > level]
    return x[idx], v[idx]
