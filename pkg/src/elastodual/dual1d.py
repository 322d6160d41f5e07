"""Dual side of the 1D bar problem: closed-form conjugates, construction of
the dual fields from a primal critical point, the dual functional, the weak
equilibrium constraint, saddle sampling, the full stationarity (KKT) Newton
solver, and the end-to-end gap certification.

All dual fields are elementwise constant, so the conjugate integrals are exact
under midpoint quadrature and the discrete duality gap reduces to the inner
product of the displacement with the converged equilibrium residual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import primal1d
from .errors import (
    ConditionViolated,
    NonConvergence,
    PositivityViolated,
    SingularHessian,
    SingularKKTMatrix,
)
from .mesh1d import Grid1D, derivative, integrate, norm_U, norm_V
from .primal1d import BarModel, PrimalState

SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class DualConfig:
    """Perturbation modulus K; the theorem-mode choice is K = EA/2."""

    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")


@dataclass(frozen=True)
class DualState1D:
    """The dual triple (v1, v2, z) as elementwise fields."""

    v1: np.ndarray
    v2: np.ndarray
    z: np.ndarray

    def denominator(self, cfg: DualConfig) -> np.ndarray:
        return self.v2 + self.z + cfg.K

    def positivity_margin(self, cfg: DualConfig) -> float:
        return float(np.min(self.denominator(cfg)))


def _require_positivity(d: DualState1D, cfg: DualConfig) -> np.ndarray:
    den = d.denominator(cfg)
    e = int(np.argmin(den))
    if den[e] <= 0.0:
        raise PositivityViolated(
            f"v2 + z + K = {den[e]:.6e} <= 0 at element {e}",
            location=e,
            margin=float(den[e]),
        )
    return den


def F_density(v: np.ndarray, cfg: DualConfig) -> np.ndarray:
    """Quadratic perturbation density K v^2 / 2."""
    return 0.5 * cfg.K * v**2


def F_star_density(z: np.ndarray, cfg: DualConfig) -> np.ndarray:
    """Conjugate density z^2 / (2K)."""
    return z**2 / (2.0 * cfg.K)


def F_star(z: np.ndarray, cfg: DualConfig, g: Grid1D) -> float:
    return integrate(F_star_density(z, cfg), g)


def G_star_K_density(d: DualState1D, m: BarModel, cfg: DualConfig) -> np.ndarray:
    den = _require_positivity(d, cfg)
    s = d.v2 + d.z
    return 0.5 * d.v1**2 / den + s**2 / (2.0 * m.EA)


def G_star_K(d: DualState1D, m: BarModel, cfg: DualConfig) -> float:
    return integrate(G_star_K_density(d, m, cfg), m.grid)


def dual_functional(d: DualState1D, m: BarModel, cfg: DualConfig) -> float:
    """J*(v*, z*) = F*(z*) - G*_K(v*, z*)."""
    return F_star(d.z, cfg, m.grid) - G_star_K(d, m, cfg)


def construct_duals(m: BarModel, u0: PrimalState, cfg: DualConfig) -> DualState1D:
    """Closed-form dual triple at a primal state inside the slope condition."""
    value, ok = primal1d.condition_check(u0, m.grid)
    if not ok:
        raise ConditionViolated(f"||u_x||_inf = {value:.6f} >= 1/4")
    ux = derivative(u0.u, m.grid)
    z = cfg.K * ux
    v2 = m.EA * (ux + 0.5 * ux**2) - z
    v1 = (z + v2 + cfg.K) * ux
    return DualState1D(v1=v1, v2=v2, z=z)


def equilibrium_residual(d: DualState1D, m: BarModel) -> np.ndarray:
    """Weak form of (v1 + v2)_x + P = 0 against interior hat functions."""
    g = m.grid
    g.check_elem(d.v1)
    g.check_elem(d.v2)
    t = d.v1 + d.v2
    r = np.zeros(g.n_elem + 1)
    r[1:-1] = t[:-1] - t[1:]
    load = m.P * g.h
    r[1:-1] -= 0.5 * (load[:-1] + load[1:])
    return r


def dstar_hessian_z(d: DualState1D, m: BarModel, cfg: DualConfig) -> np.ndarray:
    """Elementwise second z-derivative of the dual density,
    1/K - v1^2/(v2+z+K)^3 - 1/(EA)."""
    den = _require_positivity(d, cfg)
    return 1.0 / cfg.K - d.v1**2 / den**3 - 1.0 / m.EA


def _dual_density_z_grad(d: DualState1D, m: BarModel, cfg: DualConfig) -> np.ndarray:
    den = _require_positivity(d, cfg)
    return d.z / cfg.K + 0.5 * d.v1**2 / den**2 - (d.v2 + d.z) / m.EA


def minimize_in_z_ball(
    d: DualState1D,
    m: BarModel,
    cfg: DualConfig,
    z_center: np.ndarray,
    r1: float,
    tol: float = 1e-14,
    max_iter: int = 100,
) -> tuple[DualState1D, int]:
    """Minimize J* over z within the sup-norm ball of radius r1 around
    ``z_center``, holding (v1, v2) fixed.

    The dual density is separable per element, so this is a bank of projected
    scalar Newton iterations on the (locally convex) density.  Returns the
    minimizing state and the number of elements whose minimum sits on the ball
    boundary.
    """
    lo, hi = z_center - r1, z_center + r1
    z = np.clip(d.z, lo, hi)
    for _ in range(max_iter):
        state = DualState1D(d.v1, d.v2, z)
        grad = _dual_density_z_grad(state, m, cfg)
        curv = dstar_hessian_z(state, m, cfg)
        if np.any(curv <= 0.0):
            raise NonConvergence("z-problem lost convexity inside the ball")
        step = -grad / curv
        z_new = np.clip(z + step, lo, hi)
        if np.max(np.abs(z_new - z)) <= tol:
            z = z_new
            break
        z = z_new
    at_boundary = int(np.sum((z <= lo + 1e-13) | (z >= hi - 1e-13)))
    result = DualState1D(d.v1, d.v2, z)
    # KKT check: interior elements must have zero gradient
    grad = _dual_density_z_grad(result, m, cfg)
    interior = (z > lo + 1e-13) & (z < hi - 1e-13)
    if np.any(np.abs(grad[interior]) > 1e-9):
        raise NonConvergence("projected Newton did not reach stationarity")
    return result, at_boundary


@dataclass
class SaddleResult:
    n_samples: int
    passed_z: int
    passed_v: int
    r1: float
    r2: float
    boundary_hits: int = 0
    radius_shrinks: int = 0


def saddle_verify(
    m: BarModel,
    u0: PrimalState,
    d_hat: DualState1D,
    cfg: DualConfig,
    r1: float,
    r2: float,
    n_samples: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
    constraint_tol: float = 1e-9,
) -> SaddleResult:
    """Sample the saddle structure of J* around the constructed dual point.

    (a) random z in the r1-ball must not drop J* below the center value;
    (b) random constraint-preserving v-perturbations in the r2-ball must keep
    the inner z-ball minimum at or below the center value.

    Perturbations are uniform per element, rescaled to the requested sup norm;
    samples are generated up front so results are deterministic per seed.
    """
    if norm_V(equilibrium_residual(d_hat, m)[1:-1]) > constraint_tol:
        raise ValueError("dual state violates the weak equilibrium constraint")
    rng = np.random.default_rng(seed)
    n = m.grid.n_elem
    J_center = dual_functional(d_hat, m, cfg)
    margin = d_hat.positivity_margin(cfg)

    shrinks = 0
    # shrink radii until the sampled balls stay inside the positivity domain
    while r1 + 2.0 * r2 >= margin and shrinks < 60:
        r1 *= 0.5
        r2 *= 0.5
        shrinks += 1
    if r1 + 2.0 * r2 >= margin:
        raise PositivityViolated(
            "cannot fit sampling balls inside the positivity domain",
            margin=margin,
        )

    z_deltas = rng.uniform(-1.0, 1.0, size=(n_samples, n))
    v_deltas = rng.uniform(-1.0, 1.0, size=(n_samples, n))
    v_consts = rng.uniform(-1.0, 1.0, size=n_samples)

    passed_z = 0
    for k in range(n_samples):
        delta = z_deltas[k]
        mx = np.max(np.abs(delta))
        if mx > 0:
            delta = delta * (r1 / mx)
        sample = DualState1D(d_hat.v1, d_hat.v2, d_hat.z + delta)
        if dual_functional(sample, m, cfg) >= J_center - tol:
            passed_z += 1

    passed_v = 0
    boundary_hits = 0
    for k in range(n_samples):
        d1 = v_deltas[k]
        d2 = v_consts[k] - d1  # constant sum: weak divergence is unchanged
        mx = max(np.max(np.abs(d1)), np.max(np.abs(d2)))
        if mx > 0:
            d1, d2 = d1 * (r2 / mx), d2 * (r2 / mx)
        perturbed = DualState1D(d_hat.v1 + d1, d_hat.v2 + d2, d_hat.z)
        minimized, at_boundary = minimize_in_z_ball(
            perturbed, m, cfg, d_hat.z, r1
        )
        boundary_hits += int(at_boundary > 0)
        if dual_functional(minimized, m, cfg) <= J_center + tol:
            passed_v += 1

    return SaddleResult(
        n_samples=n_samples,
        passed_z=passed_z,
        passed_v=passed_v,
        r1=r1,
        r2=r2,
        boundary_hits=boundary_hits,
        radius_shrinks=shrinks,
    )


def stationarity_residuals(
    d: DualState1D, u: np.ndarray, m: BarModel, cfg: DualConfig
) -> dict[str, float]:
    """Max norms of the four stationarity equations of the Lagrangian."""
    den = _require_positivity(d, cfg)
    w = derivative(u, m.grid)
    s = d.v2 + d.z
    r_z = d.z / cfg.K + 0.5 * d.v1**2 / den**2 - s / m.EA
    r_v1 = -d.v1 / den + w
    r_v2 = 0.5 * d.v1**2 / den**2 - s / m.EA + w
    r_u = equilibrium_residual(d, m)
    return {
        "z": norm_V(r_z),
        "v1": norm_V(r_v1),
        "v2": norm_V(r_v2),
        "u": norm_V(r_u[1:-1]),
    }


def kkt_solve(
    m: BarModel,
    cfg: DualConfig,
    init: tuple[DualState1D, np.ndarray],
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[DualState1D, np.ndarray, int]:
    """Newton solve of the full stationarity system of the Lagrangian.

    Unknowns are (z, v1, v2) per element plus the multiplier u at interior
    nodes; the converged multiplier is the primal critical point.  Returns the
    dual state, the full nodal multiplier, and the iteration count.
    """
    g = m.grid
    n = g.n_elem
    d0, u_full = init
    z = d0.z.copy()
    v1 = d0.v1.copy()
    v2 = d0.v2.copy()
    ui = u_full[1:-1].copy()
    h = g.h
    EA = m.EA
    K = cfg.K

    def full_u(ui_):
        u = np.zeros(n + 1)
        u[1:-1] = ui_
        return u

    def residual_vec(z, v1, v2, ui):
        d = DualState1D(v1, v2, z)
        den = _require_positivity(d, cfg)
        w = derivative(full_u(ui), g)
        s = v2 + z
        r_z = z / K + 0.5 * v1**2 / den**2 - s / EA
        r_v1 = -v1 / den + w
        r_v2 = 0.5 * v1**2 / den**2 - s / EA + w
        r_u = equilibrium_residual(d, m)[1:-1]
        return np.concatenate([r_z, r_v1, r_v2, r_u]), den

    for it in range(max_iter + 1):
        r, den = residual_vec(z, v1, v2, ui)
        if norm_V(r) <= tol:
            return DualState1D(v1, v2, z), full_u(ui), it
        if it == max_iter:
            raise NonConvergence(
                f"KKT Newton: residual {norm_V(r):.3e} after {max_iter} iterations"
            )
        # dense Jacobian; desk scale keeps this cheap
        N = 3 * n + (n - 1)
        Jm = np.zeros((N, N))
        iz, iv1, iv2 = np.arange(n), n + np.arange(n), 2 * n + np.arange(n)
        iu = 3 * n + np.arange(n - 1)
        c3 = v1**2 / den**3
        # d(r_z)
        Jm[iz, iz] = 1.0 / K - c3 - 1.0 / EA
        Jm[iz, iv1] = v1 / den**2
        Jm[iz, iv2] = -c3 - 1.0 / EA
        # d(r_v1); w_e depends on u_e and u_{e+1} (interior only)
        Jm[iv1, iz] = v1 / den**2
        Jm[iv1, iv1] = -1.0 / den
        Jm[iv1, iv2] = v1 / den**2
        # d(r_v2)
        Jm[iv2, iz] = -c3 - 1.0 / EA
        Jm[iv2, iv1] = v1 / den**2
        Jm[iv2, iv2] = -c3 - 1.0 / EA
        # dw_e/du_i: +1/h for i = e+1, -1/h for i = e (interior nodes 1..n-1)
        for e in range(n):
            if e + 1 <= n - 1:
                Jm[iv1[e], iu[e]] += 1.0 / h
                Jm[iv2[e], iu[e]] += 1.0 / h
            if e >= 1:
                Jm[iv1[e], iu[e - 1]] -= 1.0 / h
                Jm[iv2[e], iu[e - 1]] -= 1.0 / h
        # d(r_u)_i = (v1+v2)_{i-1} - (v1+v2)_i - load
        for i in range(1, n):
            Jm[iu[i - 1], iv1[i - 1]] += 1.0
            Jm[iu[i - 1], iv2[i - 1]] += 1.0
            Jm[iu[i - 1], iv1[i]] -= 1.0
            Jm[iu[i - 1], iv2[i]] -= 1.0
        try:
            step = np.linalg.solve(Jm, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularKKTMatrix(str(exc)) from exc
        z = z + step[iz]
        v1 = v1 + step[iv1]
        v2 = v2 + step[iv2]
        ui = ui + step[iu]
    raise NonConvergence("unreachable")


@dataclass
class GapReport:
    """Machine-readable certification record for one bar problem."""

    J_primal: float = 0.0
    J_dual: float = 0.0
    gap: float = 0.0
    min_positivity_margin: float = 0.0
    min_hessian_z: float = 0.0
    condition_norm: float = 0.0
    condition_ok: bool = False
    min_eig: float = 0.0
    residual_norm: float = 0.0
    constraint_residual_norm: float = 0.0
    saddle_samples_passed: tuple[int, int] = (0, 0)
    saddle_samples_total: int = 0
    saddle_boundary_hits: int = 0
    kkt_converged: bool = False
    kkt_iters: int = 0
    local_min_passed: int = 0
    local_min_total: int = 0
    newton_iters: int = 0
    r: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    seed: int = 0
    passed: bool = False
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["saddle_samples_passed"] = list(self.saddle_samples_passed)
        return d

    def to_json(self, config_echo: dict | None = None) -> str:
        doc = {
            "version": SCHEMA_VERSION,
            "config_echo": config_echo or {},
            "primal": {
                "J": self.J_primal,
                "residual_norm": self.residual_norm,
                "min_eig": self.min_eig,
                "condition_norm": self.condition_norm,
                "condition_ok": self.condition_ok,
            },
            "dual": {
                "J_star": self.J_dual,
                "gap": self.gap,
                "positivity_margin": self.min_positivity_margin,
                "hessian_z_min": self.min_hessian_z,
                "constraint_residual_norm": self.constraint_residual_norm,
            },
            "saddle": {
                "r": self.r,
                "r1": self.r1,
                "r2": self.r2,
                "samples": self.saddle_samples_total,
                "passed_z": self.saddle_samples_passed[0],
                "passed_v": self.saddle_samples_passed[1],
                "boundary_hits": self.saddle_boundary_hits,
            },
            "kkt": {"converged": self.kkt_converged, "iters": self.kkt_iters},
            "local_min": {
                "passed": self.local_min_passed,
                "total": self.local_min_total,
            },
            "seed": self.seed,
            "passed": self.passed,
            "errors": self.errors,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def sine_load_model(
    E: float, A: float, L: float, amplitude: float, n_elem: int
) -> BarModel:
    """Bar under P(x) = amplitude * sin(pi x / L), sampled at midpoints."""
    g = Grid1D(L, n_elem)
    P = amplitude * np.sin(np.pi * g.midpoints / L)
    return BarModel(E, A, g, P)


def certify(
    m: BarModel,
    seed: int = 0,
    gap_tol: float = 1e-10,
    residual_tol: float = 1e-12,
    eig_tol: float = 1e-10,
    saddle_tol: float = 1e-10,
    n_saddle: int = 100,
    n_local: int = 200,
    continuation_steps: int = 4,
) -> GapReport:
    """Full Theorem-1-style certification pipeline for one bar model.

    Solver or hypothesis failures are recorded in the report instead of
    raising, so sweeps can continue past bad cases.
    """
    report = GapReport(seed=seed)
    cfg = DualConfig(K=m.EA / 2.0)
    iters: list[int] = []
    try:
        u0 = primal1d.solve_newton(
            m, continuation_steps, residual_tol, iteration_log=iters
        )
    except (NonConvergence, SingularHessian):
        # beyond the limit point of the small-strain branch; fall back to a
        # globally convergent descent solver so the hypothesis check can run
        try:
            u0 = primal1d.solve_descent(m, residual_tol, iteration_log=iters)
        except (NonConvergence, SingularHessian) as exc:
            report.errors.append(f"newton: {exc}")
            return report
    report.newton_iters = sum(iters)

    report.residual_norm = norm_V(residual_interior(m, u0))
    value, ok = primal1d.condition_check(u0, m.grid)
    report.condition_norm = value
    report.condition_ok = ok
    if not ok:
        report.errors.append(
            f"hypothesis: ||u_x||_inf = {value:.6f} >= 1/4, no certification claimed"
        )
        report.J_primal = primal1d.energy(m, u0)
        return report

    d_hat = construct_duals(m, u0, cfg)
    report.J_primal = primal1d.energy(m, u0)
    report.J_dual = dual_functional(d_hat, m, cfg)
    report.gap = report.J_primal - report.J_dual
    report.min_positivity_margin = d_hat.positivity_margin(cfg)
    report.min_hessian_z = float(np.min(dstar_hessian_z(d_hat, m, cfg)))
    report.constraint_residual_norm = norm_V(
        equilibrium_residual(d_hat, m)[1:-1]
    )
    report.min_eig = primal1d.second_variation_min_eig(m, u0)

    r1 = min(1e-2, 0.5 * report.min_positivity_margin)
    r2 = r1
    report.r = r1 / cfg.K

    try:
        saddle = saddle_verify(
            m, u0, d_hat, cfg, r1, r2, n_samples=n_saddle, seed=seed,
            tol=saddle_tol,
        )
        report.r1, report.r2 = saddle.r1, saddle.r2
        report.saddle_samples_passed = (saddle.passed_z, saddle.passed_v)
        report.saddle_samples_total = saddle.n_samples
        report.saddle_boundary_hits = saddle.boundary_hits
    except (PositivityViolated, NonConvergence, ValueError) as exc:
        report.errors.append(f"saddle: {exc}")

    try:
        _, _, iters = kkt_solve(m, cfg, (d_hat, u0.u), tol=1e-11)
        report.kkt_converged = True
        report.kkt_iters = iters
    except (NonConvergence, SingularKKTMatrix) as exc:
        report.errors.append(f"kkt: {exc}")

    rng = np.random.default_rng(seed + 1)
    J0 = report.J_primal
    passed_local = 0
    for _ in range(n_local):
        delta = np.zeros(m.grid.n_elem + 1)
        delta[1:-1] = rng.uniform(-1.0, 1.0, m.grid.n_elem - 1)
        scale = norm_U(delta, m.grid)
        if scale > 0:
            delta *= 1e-3 / scale
        if primal1d.energy(m, PrimalState(u0.u + delta)) >= J0 - 1e-12:
            passed_local += 1
    report.local_min_passed = passed_local
    report.local_min_total = n_local

    report.passed = (
        abs(report.gap) <= gap_tol * (1.0 + abs(report.J_primal))
        and report.condition_ok
        and report.min_positivity_margin > (7.0 / 32.0) * m.EA - 1e-12
        and report.min_hessian_z > 5.0 / (7.0 * m.EA) - 1e-12
        and report.min_eig >= -eig_tol
        and report.saddle_samples_passed == (n_saddle, n_saddle)
        and report.local_min_passed == n_local
        and report.kkt_converged
        and not report.errors
    )
    return report


def residual_interior(m: BarModel, s: PrimalState) -> np.ndarray:
    return primal1d.residual(m, s)[1:-1]
