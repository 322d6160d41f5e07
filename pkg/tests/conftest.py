"""Shared fixtures and independent oracles used across the test suite.

The oracles here deliberately avoid the code paths they are meant to check:
high-resolution quadrature instead of the package's midpoint rule, dense
eigensolvers instead of the tridiagonal path, Barzilai-Borwein descent
instead of Newton, and brute-force grid search instead of closed-form
conjugates.
"""

import math

import numpy as np
import pytest

from elastodual import dual1d, primal1d
from elastodual.mesh1d import Grid1D


@pytest.fixture(scope="session")
def bar_model():
    """Canonical certification case: E=A=L=1, P = 0.1 sin(pi x), n=64."""
    return dual1d.sine_load_model(1.0, 1.0, 1.0, 0.1, 64)


@pytest.fixture(scope="session")
def bar_solution(bar_model):
    return primal1d.solve_newton(bar_model, continuation_steps=4, tol=1e-12)


@pytest.fixture(scope="session")
def bar_duals(bar_model, bar_solution):
    cfg = dual1d.DualConfig(K=bar_model.EA / 2.0)
    return dual1d.construct_duals(bar_model, bar_solution, cfg), cfg


def interp_linear(u: np.ndarray, g: Grid1D, x: np.ndarray):
    """Evaluate a piecewise-linear nodal field and its slope at points x."""
    e = np.clip((x / g.h).astype(int), 0, g.n_elem - 1)
    ux = np.diff(u) / g.h
    return u[e] + ux[e] * (x - g.nodes[e]), ux[e]


def energy_oracle_1d(m, u, n_fine=1_000_000):
    """High-resolution midpoint quadrature of the energy of the P1 field u.

    The load P is the model's elementwise field (piecewise constant), matched
    to the same fine quadrature.
    """
    g = m.grid
    x = (np.arange(n_fine) + 0.5) * (g.length / n_fine)
    uval, ux = interp_linear(u, g, x)
    e = np.clip((x / g.h).astype(int), 0, g.n_elem - 1)
    strain = ux + 0.5 * ux**2
    dens = 0.5 * m.EA * strain**2 - m.P[e] * uval
    return float(np.sum(dens) * g.length / n_fine)


def bb_minimize_1d(m, tol=1e-11, max_iter=50_000):
    """Barzilai-Borwein gradient descent on the 1D energy.

    Uses the residual as the gradient (itself validated against finite
    differences of the energy), providing a Newton-free route to u0.
    """
    u = np.zeros(m.grid.n_elem + 1)
    r_prev = s_prev = None
    for _ in range(max_iter):
        r = primal1d.residual(m, primal1d.PrimalState(u))[1:-1]
        if np.max(np.abs(r)) < tol:
            return primal1d.PrimalState(u)
        if r_prev is None:
            step = 1e-2
        else:
            dg = r - r_prev
            denom = float(np.dot(dg, dg))
            step = abs(float(np.dot(s_prev, dg))) / denom if denom > 0 else 1e-2
        s_prev = -step * r
        r_prev = r
        u = u.copy()
        u[1:-1] += s_prev
    raise AssertionError("BB descent oracle did not converge")


def f_star_sup_oracle(z: float, K: float) -> float:
    """Grid-search sup_v {v z - K v^2 / 2} over [-10, 10], step 1e-3."""
    v = np.arange(-10.0, 10.0 + 1e-9, 1e-3)
    return float(np.max(v * z - 0.5 * K * v**2))


def g_star_k_sup_oracle(v1s, v2s, zs, EA, K):
    """Two-stage grid search of the defining sup of the 1D G*_K density:
    sup_{a,b} a (z + v2) + b v1 - EA/2 (a + b^2/2)^2 - K/2 b^2."""

    def val(a, b):
        return (
            a * (zs + v2s) + b * v1s
            - 0.5 * EA * (a + 0.5 * b**2) ** 2 - 0.5 * K * b**2
        )

    g = np.arange(-10.0, 10.0 + 1e-9, 1e-2)
    A, B = np.meshgrid(g, g)
    F = val(A, B)
    i = np.unravel_index(np.argmax(F), F.shape)
    a0, b0 = float(A[i]), float(B[i])
    ga = np.arange(a0 - 0.02, a0 + 0.02 + 1e-12, 1e-4)
    gb = np.arange(b0 - 0.02, b0 + 0.02 + 1e-12, 1e-4)
    A, B = np.meshgrid(ga, gb)
    return float(np.max(val(A, B)))


def golden_max(f, lo, hi, iters=60):
    """Golden-section maximization of a unimodal scalar function."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def random_rotation(rng):
    """Haar-ish random proper rotation from a QR factorization."""
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q @ np.diag(np.sign(np.diag(R)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
