"""Domain types and the basic machinery shared by every solver.

Densities live on the opinion interval X = [0, 1] and are handled through
their even 2-periodic extension to [-1, 1). Grids carry ``2 * N_g`` uniform
nodes ``x_j = -1 + j / N_g`` so that x = 0 sits at index ``N_g`` and x = 1
coincides (periodically) with x = -1 at index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_NG = 256


class ConfigurationError(ValueError):
    """Invalid model or discretisation parameters."""


class BlowUpError(FloatingPointError):
    """A time integration produced non-finite values."""

    def __init__(self, message: str, t: float | None = None, step: int | None = None):
        super().__init__(message)
        self.t = t
        self.step = step


# ----------------------------------------------------------------------------
# domain types
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Confidence range ``R``, noise level ``sigma`` and relative radical mass ``M``."""

    R: float = 0.1
    sigma: float = 0.01
    M: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.R < 1.0):
            raise ConfigurationError(f"R must lie in (0, 1), got {self.R!r}")
        if not (self.sigma >= 0.0) or not np.isfinite(self.sigma):
            raise ConfigurationError(f"sigma must be >= 0, got {self.sigma!r}")
        if not (self.M >= 0.0) or not np.isfinite(self.M):
            raise ConfigurationError(f"M must be >= 0, got {self.M!r}")

    def replace(self, **changes) -> "ModelParams":
        values = {"R": self.R, "sigma": self.sigma, "M": self.M}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class RadicalDensity:
    """Triangular radical density with mean ``A`` and half-width ``S``.

    ``q`` holds the cosine coefficients q_0..q_{n_max}; build instances with
    :meth:`triangular` unless you already have the coefficients.
    """

    A: float
    S: float
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0.0 < self.A < 1.0):
            raise ConfigurationError(f"A must lie in (0, 1), got {self.A!r}")
        if not (self.S > 0.0):
            raise ConfigurationError(f"S must be positive, got {self.S!r}")
        if self.A - self.S < -1e-12 or self.A + self.S > 1.0 + 1e-12:
            raise ConfigurationError(
                f"support [A-S, A+S] = [{self.A - self.S}, {self.A + self.S}] leaves [0, 1]"
            )
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size < 2:
            raise ConfigurationError("q needs at least q_0 and q_1")
        if q[0] != 1.0:
            raise ConfigurationError(f"q_0 must equal 1 (unit mass), got {q[0]!r}")
        object.__setattr__(self, "q", q)

    @classmethod
    def triangular(cls, A: float, S: float, n_max: int = 512) -> "RadicalDensity":
        return cls(A, S, radical_coeffs(A, S, n_max))

    @property
    def n_max(self) -> int:
        return self.q.size - 1

    def coeffs(self, n_max: int) -> np.ndarray:
        """q_0..q_{n_max}, extending analytically past the stored order."""
        if n_max <= self.n_max:
            return self.q[: n_max + 1]
        return radical_coeffs(self.A, self.S, n_max)

    def __call__(self, x):
        return triangular_density(self, x)

    def l2_norm(self, domain: str = "tilde") -> float:
        """L2 norm of the (exact) triangular density, over X or the extension X~."""
        sq = 2.0 / (3.0 * self.S)
        return float(np.sqrt(2.0 * sq if domain == "tilde" else sq))


@dataclass
class FourierState:
    """Cosine coefficients p_0..p_{N_f} of a density at time ``t``."""

    t: float
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 1 or self.p.size < 2:
            raise ConfigurationError("FourierState needs p_0 and at least one mode")
        if self.t < 0:
            raise ConfigurationError(f"time must be non-negative, got {self.t}")

    @property
    def N_f(self) -> int:
        return self.p.size - 1

    @classmethod
    def uniform(cls, N_f: int, t: float = 0.0) -> "FourierState":
        p = np.zeros(N_f + 1)
        p[0] = 1.0
        return cls(t, p)


@dataclass
class GridDensity:
    """Density samples at the 2*N_g nodes spanning [-1, 1)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 4 or self.values.size % 2:
            raise ConfigurationError("grid must hold an even number (>= 4) of samples")

    @property
    def N_g(self) -> int:
        return self.values.size // 2

    @property
    def h(self) -> float:
        return 1.0 / self.N_g

    @property
    def x(self) -> np.ndarray:
        return grid_nodes(self.N_g)

    @classmethod
    def from_function(cls, func, N_g: int = DEFAULT_NG) -> "GridDensity":
        """Sample ``func`` (defined on [0, 1]) through the even 2-periodic fold."""
        return cls(np.asarray(func(fold(grid_nodes(N_g))), dtype=float))

    @classmethod
    def uniform(cls, N_g: int = DEFAULT_NG) -> "GridDensity":
        return cls(np.ones(2 * N_g))

    def half(self) -> np.ndarray:
        """Samples on [0, 1] including both endpoints (N_g + 1 values)."""
        n = self.N_g
        return np.concatenate([self.values[n:], self.values[:1]])

    @property
    def half_x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N_g + 1)

    def mirrored(self) -> np.ndarray:
        return self.values[(-np.arange(self.values.size)) % self.values.size]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.values - self.mirrored())))

    def symmetrize(self) -> "GridDensity":
        return GridDensity(0.5 * (self.values + self.mirrored()))

    def integral(self) -> float:
        """Trapezoid integral over [0, 1]."""
        return trapezoid_01(self.half(), self.h)

    def normalized(self) -> "GridDensity":
        return GridDensity(self.values / self.integral())


def grid_nodes(N_g: int) -> np.ndarray:
    return -1.0 + np.arange(2 * N_g) / N_g


def trapezoid_01(half_values: np.ndarray, h: float) -> float:
    v = np.asarray(half_values)
    return float(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def fold(x):
    """Even 2-periodic fold of the real line onto [0, 1]."""
    y = np.mod(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def l2_norm(values: np.ndarray, domain: str = "tilde") -> float:
    """L2 norm of evenly extended grid samples over [-1, 1] (``tilde``) or [0, 1]."""
    v = np.asarray(values, dtype=float)
    sq = float(np.sum(v**2)) / (v.size // 2)
    if domain == "tilde":
        return float(np.sqrt(sq))
    if domain == "unit":
        return float(np.sqrt(0.5 * sq))
    raise ConfigurationError(f"unknown domain {domain!r}")


def l1_norm(values: np.ndarray, domain: str = "unit") -> float:
    v = np.abs(np.asarray(values, dtype=float))
    total = float(np.sum(v)) / (v.size // 2)
    return total if domain == "tilde" else 0.5 * total


# ----------------------------------------------------------------------------
# kernel, radicals, cosine transforms
# ----------------------------------------------------------------------------


def kernel_w(xi, R: float):
    """Bounded-confidence force: ``xi`` inside the confidence range, zero outside."""
    xi = np.asarray(xi, dtype=float)
    out = np.where(np.abs(xi) <= R, xi, 0.0)
    return out if out.ndim else float(out)


def triangular_density(rd: RadicalDensity, x):
    x = np.asarray(x, dtype=float)
    out = np.maximum(rd.S - np.abs(x - rd.A), 0.0) / rd.S**2
    return out if out.ndim else float(out)


def radical_coeffs(A: float, S: float, max_n: int) -> np.ndarray:
    """Cosine coefficients of the triangular density, q_0 = 1 by normalisation."""
    if max_n < 1:
        raise ConfigurationError("max_n must be >= 1")
    n = np.arange(max_n + 1, dtype=float)
    # np.sinc(z) = sin(pi z) / (pi z)
    q = 2.0 * np.cos(n * np.pi * A) * np.sinc(n * S / 2.0) ** 2
    q[0] = 1.0
    return q


def cosine_analyze(g: GridDensity, N_f: int, tol: float = 1e-8, t: float = 0.0) -> FourierState:
    """Project a grid density onto cos(pi n x), n = 0..N_f (trapezoid rule)."""
    N_g = g.N_g
    if not (1 <= N_f < N_g):
        raise ConfigurationError(f"need 1 <= N_f < N_g, got N_f={N_f}, N_g={N_g}")
    scale = max(1.0, float(np.max(np.abs(g.values))))
    asym = g.asymmetry()
    if asym > tol * scale:
        raise ConfigurationError(f"grid density is not even (asymmetry {asym:.3e})")
    # nodes start at x = -1, hence the (-1)^n phase
    F = np.fft.rfft(g.values)[: N_f + 1].real
    sign = np.where(np.arange(N_f + 1) % 2, -1.0, 1.0)
    p = sign * F / N_g
    p[0] *= 0.5
    return FourierState(t, p)


def cosine_synthesize(s: FourierState | np.ndarray, N_g: int = DEFAULT_NG) -> GridDensity:
    p = s.p if isinstance(s, FourierState) else np.asarray(s, dtype=float)
    N_f = p.size - 1
    if N_f > N_g:
        # point evaluation on a grid coarser than the series
        x = grid_nodes(N_g)
        return GridDensity(np.cos(np.pi * np.outer(x, np.arange(N_f + 1))) @ p)
    spectrum = np.zeros(N_g + 1, dtype=complex)
    sign = np.where(np.arange(N_f + 1) % 2, -1.0, 1.0)
    spectrum[: N_f + 1] = sign * p * N_g
    spectrum[0] *= 2.0
    if N_f == N_g:
        spectrum[N_g] *= 2.0
    return GridDensity(np.fft.irfft(spectrum, n=2 * N_g))


def cosine_energy(p: np.ndarray) -> float:
    """Integral of rho^2 over [0, 1] from cosine coefficients (Parseval)."""
    p = np.asarray(p, dtype=float)
    return float(p[0] ** 2 + 0.5 * np.sum(p[1:] ** 2))


# ----------------------------------------------------------------------------
# direct-quadrature convolution (oracle path)
# ----------------------------------------------------------------------------


def radical_grid(rd: RadicalDensity, N_g: int) -> GridDensity:
    return GridDensity.from_function(rd, N_g)


def convolve_G(g: GridDensity, rd: RadicalDensity | None, params: ModelParams) -> np.ndarray:
    """Force field w * (rho + M rho_r) at the grid nodes by direct quadrature.

    Composite trapezoid over the window [-R, R] on the periodic grid; the
    partial cells at the window edges are integrated with the density
    linearly interpolated between nodes.
    """
    N_g, h, R = g.N_g, g.h, params.R
    if N_g * R < 8:
        raise ConfigurationError(f"grid too coarse for R={R}: N_g*R = {N_g * R:.2f} < 8")
    s = g.values.copy()
    if rd is not None and params.M > 0:
        s = s + params.M * radical_grid(rd, N_g).values
    K = int(np.floor(R / h + 1e-12))
    frac = R - K * h
    if frac < 1e-12 * h:
        frac = 0.0

    def odd_part(m):
        # s(x_i - m h) - s(x_i + m h)
        return np.roll(s, m) - np.roll(s, -m)

    # G(x) = int_0^R u [s(x - u) - s(x + u)] du
    G = np.zeros_like(s)
    for m in range(1, K):
        G += m * h * odd_part(m)
    phi_K = K * h * odd_part(K)
    G = h * G + 0.5 * h * phi_K
    if frac:
        th = frac / h
        d_edge = (1.0 - th) * odd_part(K) + th * odd_part(K + 1)
        G += 0.5 * frac * (phi_K + R * d_edge)
    return G
