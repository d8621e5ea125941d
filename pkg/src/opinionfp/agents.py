"""Agent-based model: Euler-Maruyama for N interacting opinions plus fixed radicals.

Interactions are evaluated against the even 2-periodic images ``[x, -x, 2 - x]``
of every opinion; after each step opinions are folded back into [0, 1].
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .core import ConfigurationError, ModelParams, fold

log = logging.getLogger(__name__)

DEFAULT_BINS = 100


def sample_radicals(A: float, S: float, N_r: int, seed=None) -> np.ndarray:
    """Inverse-CDF draws from the triangular density on [A - S, A + S]."""
    if A - S < -1e-12 or A + S > 1.0 + 1e-12:
        raise ConfigurationError(f"radical support [{A - S}, {A + S}] leaves [0, 1]")
    if N_r < 0:
        raise ConfigurationError("N_r must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(N_r)
    lower = u < 0.5
    out = np.empty(N_r)
    out[lower] = A - S + S * np.sqrt(2.0 * u[lower])
    out[~lower] = A + S - S * np.sqrt(2.0 * (1.0 - u[~lower]))
    return out


def images(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, -x, 2.0 - x])


@dataclass
class AgentEnsemble:
    x: np.ndarray
    x_r: np.ndarray
    seed: int | None = None
    t: float = 0.0
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.x_r = np.asarray(self.x_r, dtype=float)
        if self.x.size == 0:
            raise ConfigurationError("ensemble needs at least one normal agent")
        for name, arr in (("x", self.x), ("x_r", self.x_r)):
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @property
    def N(self) -> int:
        return self.x.size

    @property
    def N_r(self) -> int:
        return self.x_r.size

    @classmethod
    def initial(cls, N: int, M: float, A: float, S: float, seed=None) -> "AgentEnsemble":
        """Uniform normal opinions and round(M * N) triangular radicals."""
        rng = np.random.default_rng(seed)
        x_r = sample_radicals(A, S, int(round(M * N)), rng)
        x = rng.random(N)
        return cls(x, x_r, seed, 0.0, rng)


# ----------------------------------------------------------------------------
# compiled kernels
# ----------------------------------------------------------------------------


@njit(cache=True)
def _window(E, cum, xi, R):
    # indices [lo, hi) of sorted E with |xi - E_j| <= R, boundary-exact
    lo = np.searchsorted(E, xi - R)
    hi = np.searchsorted(E, xi + R, side="right")
    n = E.size
    while lo > 0 and abs(xi - E[lo - 1]) <= R:
        lo -= 1
    while lo < hi and abs(xi - E[lo]) > R:
        lo += 1
    while hi < n and abs(xi - E[hi]) <= R:
        hi += 1
    while hi > lo and abs(xi - E[hi - 1]) > R:
        hi -= 1
    return lo, hi


@njit(cache=True)
def _sorted_images(x):
    xs = np.sort(x)
    n = xs.size
    E = np.empty(3 * n)
    for i in range(n):
        E[i] = -xs[n - 1 - i]
        E[n + i] = xs[i]
        E[2 * n + i] = 2.0 - xs[n - 1 - i]
    return E


@njit(cache=True)
def _prefix(E):
    cum = np.zeros(E.size + 1)
    for i in range(E.size):
        cum[i + 1] = cum[i] + E[i]
    return cum


@njit(cache=True)
def _drift_kernel(x, Er, cum_r, R, inv_n):
    E = _sorted_images(x)
    cum = _prefix(E)
    out = np.empty(x.size)
    for i in range(x.size):
        xi = x[i]
        lo, hi = _window(E, cum, xi, R)
        acc = (hi - lo) * xi - (cum[hi] - cum[lo])
        if Er.size:
            lo, hi = _window(Er, cum_r, xi, R)
            acc += (hi - lo) * xi - (cum_r[hi] - cum_r[lo])
        out[i] = -inv_n * acc
    return out


@njit(cache=True)
def _fold_inplace(x):
    for i in range(x.size):
        y = x[i] % 2.0
        if y > 1.0:
            y = 2.0 - y
        x[i] = y


@njit(cache=True)
def _advance(x, Er, cum_r, R, sigma, dt, z, inv_n):
    # z: (n_steps, N) standard normals
    sq = sigma * np.sqrt(dt)
    for s in range(z.shape[0]):
        d = _drift_kernel(x, Er, cum_r, R, inv_n)
        for i in range(x.size):
            x[i] = x[i] + d[i] * dt + sq * z[s, i]
        _fold_inplace(x)
    return x


@njit(cache=True)
def _pair_count(xs, R):
    # xs sorted; pairs (i, j) including i == j with |x_i - x_j| <= R
    n = xs.size
    total = 0
    hi = 0
    for i in range(n):
        if hi < i:
            hi = i
        while hi + 1 < n and xs[hi + 1] - xs[i] <= R:
            hi += 1
        total += hi - i
    return 2 * total + n


def _radical_table(x_r: np.ndarray):
    Er = np.sort(images(x_r)) if x_r.size else np.empty(0)
    return Er, _prefix(Er)


# ----------------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------------


def drift(ens: AgentEnsemble, R: float) -> np.ndarray:
    """Per-agent drift -(1/N) sum over image neighbours within R (normals and radicals)."""
    Er, cum_r = _radical_table(ens.x_r)
    return _drift_kernel(ens.x, Er, cum_r, float(R), 1.0 / ens.N)


def reflect(x):
    """Fold pre-step opinions back into [0, 1] (mod 2, then mirror above 1)."""
    return fold(x)


def em_step(ens: AgentEnsemble, dt: float, sigma: float, R: float, z: np.ndarray | None = None) -> AgentEnsemble:
    """One Euler-Maruyama step; ``z`` overrides the ensemble's Gaussian draws."""
    if not (dt > 0):
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if z is None:
        z = ens.rng.standard_normal(ens.N)
    x = ens.x + drift(ens, R) * dt + sigma * np.sqrt(dt) * np.asarray(z, dtype=float)
    return replace(ens, x=reflect(x), t=ens.t + dt)


def simulate(ens: AgentEnsemble, params: ModelParams, dt: float, n_steps: int, chunk: int = 256) -> AgentEnsemble:
    """Advance ``n_steps`` steps with the compiled kernel (normals drawn in fixed chunks)."""
    x = ens.x.copy()
    Er, cum_r = _radical_table(ens.x_r)
    done = 0
    while done < n_steps:
        k = min(chunk, n_steps - done)
        z = ens.rng.standard_normal((k, ens.N))
        x = _advance(x, Er, cum_r, params.R, params.sigma, dt, z, 1.0 / ens.N)
        done += k
    return replace(ens, x=x, t=ens.t + n_steps * dt)


def pair_count(x, R: float) -> int:
    """Number of ordered pairs (i, j), i == j included, with |x_i - x_j| <= R."""
    xs = np.sort(np.asarray(x, dtype=float))
    return int(_pair_count(xs, float(R)))


def order_param_discrete(x, R: float) -> float:
    """Fraction of ordered pairs (self-pairs included) within distance R."""
    n = np.size(x)
    if n == 0:
        raise ConfigurationError("order parameter of an empty ensemble")
    return pair_count(x, R) / n**2


def histogram(x, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Opinion density estimate on [0, 1] (integrates to 1)."""
    counts, _ = np.histogram(np.asarray(x), bins=bins, range=(0.0, 1.0))
    return counts * bins / max(len(x), 1)


@dataclass
class MonteCarloConfig:
    N: int = 500
    dt: float = 0.01
    t_end: float = 50.0
    realizations: int = 300
    seed: int = 0
    A: float = 0.7
    S: float = 0.1
    bins: int = DEFAULT_BINS
    sample_dt: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.realizations < 1:
            raise ConfigurationError("realizations must be >= 1")
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if not (self.dt > 0):
            raise ConfigurationError("dt must be positive")

    def sample_steps(self) -> np.ndarray:
        n_steps = int(round(self.t_end / self.dt))
        every = max(1, int(round(self.sample_dt / self.dt)))
        steps = np.arange(0, n_steps + 1, every)
        if steps[-1] != n_steps:
            steps = np.append(steps, n_steps)
        return steps


@dataclass
class MonteCarloResult:
    t: np.ndarray
    bin_edges: np.ndarray
    histograms: np.ndarray  # (n_samples, bins), averaged over realizations
    q_d: np.ndarray  # (n_samples,), averaged over realizations
    q_d_runs: np.ndarray  # (realizations, n_samples)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def at(self, t: float) -> np.ndarray:
        return self.histograms[int(np.argmin(np.abs(self.t - t)))]


def _one_realization(args):
    params, cfg, seq = args
    rng = np.random.default_rng(seq)
    ens = AgentEnsemble.initial(cfg.N, params.M, cfg.A, cfg.S, rng)
    steps = cfg.sample_steps()
    hists = np.empty((steps.size, cfg.bins))
    qd = np.empty(steps.size)
    done = 0
    for k, s in enumerate(steps):
        if s > done:
            ens = simulate(ens, params, cfg.dt, int(s - done))
            done = s
        hists[k] = histogram(ens.x, cfg.bins)
        qd[k] = order_param_discrete(ens.x, params.R)
    return hists, qd


def monte_carlo(params: ModelParams, cfg: MonteCarloConfig) -> MonteCarloResult:
    """Average histograms and Q_d over independent realizations.

    Realization r draws from the r-th child of ``SeedSequence(cfg.seed)``, so
    results do not depend on ``cfg.jobs`` or on completion order.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.realizations)
    tasks = [(params, cfg, c) for c in children]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_one_realization, tasks))
    else:
        results = [_one_realization(t) for t in tasks]
    hsum = np.zeros_like(results[0][0])
    for h, _ in results:
        hsum += h
    q_runs = np.array([q for _, q in results])
    steps = cfg.sample_steps()
    return MonteCarloResult(
        steps * cfg.dt,
        np.linspace(0.0, 1.0, cfg.bins + 1),
        hsum / cfg.realizations,
        q_runs.mean(axis=0),
        q_runs,
    )
