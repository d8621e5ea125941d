"""Independent reference computations used only by the tests.

Nothing here reuses the package's transforms or kernels: integrals go through
scipy quadrature or Gauss-Legendre rules, pair counts and drifts are brute force.
"""

import numpy as np
from scipy import integrate, linalg

GL_X, GL_W = np.polynomial.legendre.leggauss(20)


def gauss(f, a, b):
    """20-point Gauss-Legendre on [a, b] (vectorised integrand)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.sum(GL_W * f(mid + half * GL_X))


def triangle(x, A, S):
    return np.clip(S - np.abs(x - A), 0.0, None) / S**2


def triangle_even(y, A, S):
    """Triangular density carried to the whole line by the even 2-periodic fold."""
    y = np.mod(y, 2.0)
    y = np.where(y > 1.0, 2.0 - y, y)
    return triangle(y, A, S)


def q_quadrature(A, S, n):
    """2 * int_0^1 rho_r cos(pi n x) dx by adaptive quadrature (n >= 1)."""
    val, _ = integrate.quad(lambda x: triangle(x, A, S) * np.cos(np.pi * n * x),
                            A - S, A + S, points=[A], limit=200, epsabs=1e-13)
    return 2.0 * val


def cos_series(p, x):
    n = np.arange(len(p))
    return np.cos(np.pi * np.outer(np.atleast_1d(x), n)) @ p


def G_oracle(x, p, R, M, A, S):
    """G(x) = int_{-R}^{R} u (rho + M rho_r)(x - u) du with rho given by cosine coefficients.

    The u-interval is split at the kinks of the folded triangle so every
    Gauss-Legendre panel sees a smooth integrand.
    """
    kinks = np.array([A - S, A, A + S])
    images = np.concatenate([kinks + 2 * k for k in (-2, -1, 0, 1, 2)] + [-kinks + 2 * k for k in (-2, -1, 0, 1, 2)])
    cuts = x - images
    cuts = np.sort(np.concatenate([[-R, R], cuts[(cuts > -R) & (cuts < R)]]))

    def f(u):
        y = x - u
        return u * (cos_series(p, y) + M * triangle_even(y, A, S))

    return sum(gauss(f, a, b) for a, b in zip(cuts[:-1], cuts[1:]))


def galerkin_rhs(p, R, sigma, M, A, S, panels=64):
    """dp_n/dt = pi n int_{-1}^{1} rho G sin(pi n x) dx - (pi^2 n^2 sigma^2 / 2) p_n, n = 1..N_f."""
    N_f = len(p) - 1
    edges = np.linspace(-1.0, 1.0, panels + 1)
    xs = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * GL_X for a, b in zip(edges[:-1], edges[1:])])
    ws = np.concatenate([0.5 * (b - a) * GL_W for a, b in zip(edges[:-1], edges[1:])])
    G = np.array([G_oracle(x, p, R, M, A, S) for x in xs])
    rho = cos_series(p, xs)
    n = np.arange(1, N_f + 1)
    proj = np.array([np.sum(ws * rho * G * np.sin(np.pi * k * xs)) for k in n])
    return np.pi * n * proj - 0.5 * np.pi**2 * n**2 * sigma**2 * np.asarray(p)[1:]


def affine_flow(c, B, y0, t):
    """Exact solution of y' = c + B y via the augmented matrix exponential."""
    n = len(c)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = B
    aug[:n, n] = c
    return (linalg.expm(aug * t) @ np.append(y0, 1.0))[:n]


def pair_count_bruteforce(x, R):
    x = np.asarray(x)
    return int(np.sum(np.abs(x[:, None] - x[None, :]) <= R))


def drift_bruteforce(x, x_r, R):
    x = np.asarray(x, float)
    x_r = np.asarray(x_r, float)
    ext = np.concatenate([x, -x, 2 - x, x_r, -x_r, 2 - x_r])
    d = x[:, None] - ext[None, :]
    return -np.sum(np.where(np.abs(d) <= R, d, 0.0), axis=1) / x.size
