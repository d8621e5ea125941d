"""Truncated quadratic ODE system for the cosine coefficients of the density.

For modes n = 1..N_f the coefficients evolve as

    dp_n/dt = c_n + b_n . p + p . Q_n p

with c, b and Q assembled from the interaction factors
``f_n = -cos(pi n R) + sinc(pi n R)`` and the radical coefficients q_n.
The mass mode p_0 does not move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .core import (
    DEFAULT_NG,
    BlowUpError,
    ConfigurationError,
    FourierState,
    GridDensity,
    ModelParams,
    RadicalDensity,
    cosine_synthesize,
)

DEFAULT_NF = 128
DEFAULT_DT = 0.01


def f_coeff(n, R: float):
    """Interaction factor f_n = -cos(pi n R) + sinc(pi n R); even in n, f_0 = 0."""
    n = np.asarray(n, dtype=float)
    out = -np.cos(np.pi * n * R) + np.sinc(n * R)
    return out if out.ndim else float(out)


@dataclass
class OdeSystem:
    N_f: int
    c: np.ndarray
    b: np.ndarray
    Q: list = field(repr=False)
    params: ModelParams
    radicals: RadicalDensity | None
    # f_k / k for k = 1..N_f, drives the fast quadratic evaluation
    _fk_over_k: np.ndarray = field(repr=False, default=None)

    @property
    def gamma(self) -> np.ndarray:
        """Exponential growth rates (diagonal of b)."""
        return np.diag(self.b).copy()

    def quadratic(self, p: np.ndarray) -> np.ndarray:
        """p . Q_n p for every n, via convolutions instead of the sparse forms."""
        N, R = self.N_f, self.params.R
        u = self._fk_over_k * p
        out = np.zeros(N)
        # sum_{k=1}^{n-1} u_k p_{n-k}; full[i] pairs indices summing to i + 2
        full = np.convolve(u, p)
        out[1:] = full[: N - 1]
        # sum_l u_{l+n} p_l - p_{l+n} u_l
        cu = np.correlate(u, p, "full")[N:]
        cp = np.correlate(p, u, "full")[N:]
        out[: N - 1] += cu[: N - 1] - cp[: N - 1]
        return R * np.arange(1, N + 1) * out

    def quadratic_dense(self, p: np.ndarray) -> np.ndarray:
        """Reference evaluation straight from the stored Q_n matrices."""
        return np.array([p @ (Qn @ p) for Qn in self.Q])

    def linear_part(self) -> tuple[np.ndarray, np.ndarray]:
        return self.c.copy(), self.b.copy()

    def without_quadratic(self) -> "OdeSystem":
        zero = [sparse.csr_matrix((self.N_f, self.N_f)) for _ in range(self.N_f)]
        return OdeSystem(self.N_f, self.c, self.b, zero, self.params, self.radicals,
                         np.zeros(self.N_f))

    def max_stable_dt(self) -> float:
        """Largest RK4 step keeping the stiffest diffusive mode on the real stability interval."""
        lam = np.max(np.abs(np.linalg.eigvals(self.b))) if self.N_f <= 256 else np.max(np.abs(self.gamma))
        return 2.785 / lam if lam > 0 else np.inf


def _radical_q(params: ModelParams, rd: RadicalDensity | None, n_max: int) -> np.ndarray:
    if rd is None:
        if params.M > 0:
            raise ConfigurationError("M > 0 requires a radical density")
        q = np.zeros(n_max + 1)
        q[0] = 1.0
        return q
    return rd.coeffs(n_max)


def linear_terms(params: ModelParams, rd: RadicalDensity | None, N_f: int = DEFAULT_NF):
    """Constant vector c and matrix b of the mode equations (modes 1..N_f)."""
    if N_f < 1:
        raise ConfigurationError(f"N_f must be >= 1, got {N_f}")
    R, M, sigma = params.R, params.M, params.sigma
    q = _radical_q(params, rd, 2 * N_f)
    n = np.arange(1, N_f + 1)
    f = f_coeff(np.arange(2 * N_f + 1), R)

    c = 2.0 * M * R * f[n] * q[n]

    nn, kk = np.meshgrid(n, n, indexing="ij")
    diff = nn - kk
    adiff = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        minus = np.where(diff != 0, q[adiff] * f[adiff] / np.where(diff != 0, diff, 1), 0.0)
    b = nn * M * R * (q[nn + kk] * f[nn + kk] / (nn + kk) + minus)
    b[n - 1, n - 1] = 2.0 * R * f[n] + 0.5 * M * R * f[2 * n] * q[2 * n] - 0.5 * np.pi**2 * sigma**2 * n**2
    return c, b


def build_system(params: ModelParams, rd: RadicalDensity | None, N_f: int = DEFAULT_NF) -> OdeSystem:
    c, b = linear_terms(params, rd, N_f)
    R = params.R
    n = np.arange(1, N_f + 1)
    f = f_coeff(np.arange(N_f + 1), R)
    fk = f[1 : N_f + 1] / n
    Q = []
    for m in n:
        rows, cols, vals = [], [], []
        # l = m - k >= 1
        for k in range(1, m):
            rows.append(k - 1)
            cols.append(m - k - 1)
            vals.append(m * R * fk[k - 1])
        # l = k - m >= 1
        for k in range(m + 1, N_f + 1):
            l = k - m
            rows.append(k - 1)
            cols.append(l - 1)
            vals.append(m * R * (fk[k - 1] - fk[l - 1]))
        Q.append(sparse.csr_matrix((vals, (rows, cols)), shape=(N_f, N_f)))
    return OdeSystem(N_f, c, b, Q, params, rd, fk)


def rhs(sys: OdeSystem, p: np.ndarray) -> np.ndarray:
    """Time derivative of modes 1..N_f (``p`` excludes the mass mode)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (sys.N_f,):
        raise ConfigurationError(f"expected {sys.N_f} modes, got shape {p.shape}")
    return sys.c + sys.b @ p + sys.quadratic(p)


@dataclass
class FourierTrajectory:
    t: np.ndarray
    p: np.ndarray  # (n_samples, N_f + 1), column 0 is the mass mode

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> FourierState:
        return FourierState(float(self.t[i]), self.p[i].copy())

    @property
    def final(self) -> FourierState:
        return self[-1]

    def grid(self, i: int = -1, N_g: int = DEFAULT_NG) -> GridDensity:
        return cosine_synthesize(self.p[i], N_g)

    def grids(self, N_g: int = DEFAULT_NG) -> np.ndarray:
        return np.array([cosine_synthesize(row, N_g).values for row in self.p])


def _step_indices(t_end: float, dt: float, t_eval) -> tuple[int, np.ndarray]:
    if not (dt > 0):
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ConfigurationError(f"t_end must be non-negative, got {t_end}")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigurationError(f"t_end={t_end} is not a multiple of dt={dt}")
    if t_eval is None:
        t_eval = [0.0, t_end]
    idx = np.unique(np.clip(np.round(np.asarray(t_eval, float) / dt).astype(int), 0, n_steps))
    return n_steps, idx


def integrate(
    sys: OdeSystem,
    p0: FourierState | np.ndarray | None = None,
    t_end: float = 100.0,
    dt: float = DEFAULT_DT,
    t_eval=None,
) -> FourierTrajectory:
    """Fixed-step classical RK4 integration of the mode equations.

    ``p0`` carries the mass mode in position 0 (uniform start when omitted).
    Samples are taken at the steps nearest to ``t_eval`` (default: start and end).
    """
    if p0 is None:
        p0 = FourierState.uniform(sys.N_f)
    full = p0.p if isinstance(p0, FourierState) else np.asarray(p0, dtype=float)
    if full.shape != (sys.N_f + 1,):
        raise ConfigurationError(f"initial state needs {sys.N_f + 1} coefficients, got {full.shape}")
    if not np.all(np.isfinite(full)):
        raise ConfigurationError("initial state is not finite")
    n_steps, idx = _step_indices(t_end, dt, t_eval)

    c, b, quad = sys.c, sys.b, sys.quadratic

    def F(y):
        return c + b @ y + quad(y)

    y = full[1:].copy()
    out = np.empty((idx.size, sys.N_f + 1))
    out[:, 0] = full[0]
    k_out = 0
    if idx[0] == 0:
        out[0, 1:] = y
        k_out = 1
    h, h2 = dt, 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            k1 = F(y)
            k2 = F(y + h2 * k1)
            k3 = F(y + h2 * k2)
            k4 = F(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(y).all():
                t_bad = step * dt
                raise BlowUpError(
                    f"Fourier ODE state became non-finite at t={t_bad:.6g} (step {step}); "
                    f"dt={dt} may exceed the stable step {sys.max_stable_dt():.3g}",
                    t=t_bad, step=step,
                )
            if k_out < idx.size and step == idx[k_out]:
                out[k_out, 1:] = y
                k_out += 1
    return FourierTrajectory(idx * dt, out)


def equilibrium(sys: OdeSystem, p_guess=None, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Newton solve of rhs = 0 for modes 1..N_f."""
    N = sys.N_f
    y = np.zeros(N) if p_guess is None else np.asarray(p_guess, float).copy()
    Qs = [Qn + Qn.T for Qn in sys.Q]
    for _ in range(max_iter):
        r = rhs(sys, y)
        J = sys.b + np.array([Qn @ y for Qn in Qs])
        dy = np.linalg.solve(J, -r)
        y += dy
        if np.max(np.abs(dy)) < tol:
            break
    return y
