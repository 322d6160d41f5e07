"""Desk-scale trilinear hexahedral discretization of the 3D solid problem on
a box clamped at the x = 0 face, plus the field-level duality certification.

Dual fields live at the 2x2x2 Gauss points and are never interpolated; the
equilibrium constraint is enforced weakly against the displacement test
space.  This keeps every certification identity quadrature-consistent, so the
discrete duality gap reduces to the inner product of the displacement with
the converged residual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor3d
from .errors import NonConvergence, NotPositiveDefinite, SingularSystem
from .tensor3d import I3, LameParams

MAX_ELEMS_PER_AXIS = 8


@dataclass(frozen=True)
class SolidModel:
    """Box geometry, material, and loads; the x = 0 face is clamped."""

    lx: float
    ly: float
    lz: float
    nx: int
    ny: int
    nz: int
    lame: LameParams
    body_force: np.ndarray  # (3,)
    traction: np.ndarray  # (3,), applied on the x = lx face

    def __post_init__(self):
        if min(self.lx, self.ly, self.lz) <= 0:
            raise ValueError("box dimensions must be positive")
        for n in (self.nx, self.ny, self.nz):
            if not 2 <= n <= MAX_ELEMS_PER_AXIS:
                raise ValueError(
                    f"elements per axis must be in [2, {MAX_ELEMS_PER_AXIS}]"
                )
        if np.shape(self.body_force) != (3,) or np.shape(self.traction) != (3,):
            raise ValueError("loads must be 3-vectors")


# local corner signs of the reference hex, node order fixed
_CORNERS = np.array(
    [
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ],
    dtype=float,
)
_GP1 = 1.0 / np.sqrt(3.0)


def _shape_values(xi: np.ndarray) -> np.ndarray:
    """Trilinear shape values at one reference point; (8,)."""
    return np.prod(1.0 + _CORNERS * xi, axis=1) / 8.0


def _shape_grads(xi: np.ndarray) -> np.ndarray:
    """Reference gradients at one point; (8, 3)."""
    g = np.empty((8, 3))
    for d in range(3):
        terms = 1.0 + _CORNERS * xi
        terms[:, d] = _CORNERS[:, d]
        g[:, d] = np.prod(terms, axis=1) / 8.0
    return g


class BoxMesh:
    """Uniform hex mesh of the box with precomputed quadrature data."""

    def __init__(self, m: SolidModel):
        self.model = m
        nx, ny, nz = m.nx, m.ny, m.nz
        self.hx, self.hy, self.hz = m.lx / nx, m.ly / ny, m.lz / nz
        xs = np.linspace(0, m.lx, nx + 1)
        ys = np.linspace(0, m.ly, ny + 1)
        zs = np.linspace(0, m.lz, nz + 1)
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        self.coords = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        self.n_nodes = self.coords.shape[0]
        self.n_dof = 3 * self.n_nodes

        def nid(i, j, k):
            return (i * (ny + 1) + j) * (nz + 1) + k

        conn = []
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    conn.append(
                        [
                            nid(i, j, k), nid(i + 1, j, k),
                            nid(i + 1, j + 1, k), nid(i, j + 1, k),
                            nid(i, j, k + 1), nid(i + 1, j, k + 1),
                            nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1),
                        ]
                    )
        self.conn = np.array(conn)
        self.n_elem = self.conn.shape[0]

        # 2x2x2 Gauss points; uniform box makes the Jacobian constant diagonal
        pts = [np.array([a, b, c]) for a in (-_GP1, _GP1)
               for b in (-_GP1, _GP1) for c in (-_GP1, _GP1)]
        self.N = np.array([_shape_values(x) for x in pts])  # (8q, 8n)
        scale = np.array([2.0 / self.hx, 2.0 / self.hy, 2.0 / self.hz])
        self.dN = np.array([_shape_grads(x) * scale for x in pts])  # (8q, 8n, 3)
        self.detJ = self.hx * self.hy * self.hz / 8.0

        # traction face x = lx: elements with i = nx - 1, local face xi_1 = +1
        face_elems = [
            (i * ny + j) * nz + k
            for i in [nx - 1] for j in range(ny) for k in range(nz)
        ]
        self.face_elems = np.array(face_elems)
        fpts = [np.array([1.0, b, c]) for b in (-_GP1, _GP1) for c in (-_GP1, _GP1)]
        self.face_N = np.array([_shape_values(x) for x in fpts])  # (4q, 8n)
        self.face_detJ = self.hy * self.hz / 4.0

        self.clamped_nodes = np.flatnonzero(self.coords[:, 0] == 0.0)
        clamped_dofs = (3 * self.clamped_nodes[:, None] + np.arange(3)).ravel()
        mask = np.ones(self.n_dof, dtype=bool)
        mask[clamped_dofs] = False
        self.free_dofs = np.flatnonzero(mask)


def zero_displacement(mesh: BoxMesh) -> np.ndarray:
    return np.zeros((mesh.n_nodes, 3))


def displacement_gradients(mesh: BoxMesh, u: np.ndarray) -> np.ndarray:
    """Displacement gradient at all quadrature points; (n_elem, 8, 3, 3)."""
    ue = u[mesh.conn]  # (ne, 8n, 3)
    return np.einsum("enI,qnJ->eqIJ", ue, mesh.dN)


def _strain_stress(lame: LameParams, g: np.ndarray):
    E = 0.5 * (g + np.swapaxes(g, -1, -2) + np.einsum("...mI,...mJ->...IJ", g, g))
    trE = np.trace(E, axis1=-2, axis2=-1)
    sigma = lame.lam * trE[..., None, None] * I3 + 2.0 * lame.mu * E
    return E, sigma


def energy_3d(m: SolidModel, mesh: BoxMesh, u: np.ndarray) -> float:
    """Stored energy minus body and traction work, 2x2x2 Gauss quadrature."""
    g = displacement_gradients(mesh, u)
    E, sigma = _strain_stress(m.lame, g)
    elastic = 0.5 * np.sum(sigma * E) * mesh.detJ
    ue = u[mesh.conn]
    uq = np.einsum("enI,qn->eqI", ue, mesh.N)
    body = np.einsum("eqI,I->", uq, m.body_force) * mesh.detJ
    uf = u[mesh.conn[mesh.face_elems]]
    ufq = np.einsum("enI,qn->eqI", uf, mesh.face_N)
    surf = np.einsum("eqI,I->", ufq, m.traction) * mesh.face_detJ
    return float(elastic - body - surf)


def _load_vector(m: SolidModel, mesh: BoxMesh) -> np.ndarray:
    L = np.zeros((mesh.n_nodes, 3))
    body_el = mesh.detJ * np.einsum("qn,I->nI", mesh.N, m.body_force)
    for e in range(mesh.n_elem):
        L[mesh.conn[e]] += body_el
    surf_el = mesh.face_detJ * np.einsum("qn,I->nI", mesh.face_N, m.traction)
    for e in mesh.face_elems:
        L[mesh.conn[e]] += surf_el
    return L


def _internal_forces(mesh: BoxMesh, flux: np.ndarray) -> np.ndarray:
    """Assemble the weak divergence of a per-quadrature-point tensor field."""
    Rel = mesh.detJ * np.einsum("eqIJ,qnJ->enI", flux, mesh.dN)
    R = np.zeros((mesh.n_nodes, 3))
    np.add.at(R, mesh.conn, Rel)
    return R


def residual_3d(m: SolidModel, mesh: BoxMesh, u: np.ndarray) -> np.ndarray:
    """Weak-form residual; clamped rows zeroed.  Returns (n_nodes, 3)."""
    g = displacement_gradients(mesh, u)
    _, sigma = _strain_stress(m.lame, g)
    piola = np.einsum("eqIm,eqmJ->eqIJ", np.broadcast_to(I3, g.shape) + g, sigma)
    R = _internal_forces(mesh, piola) - _load_vector(m, mesh)
    R[mesh.clamped_nodes] = 0.0
    return R


def hessian_3d(m: SolidModel, mesh: BoxMesh, u: np.ndarray) -> np.ndarray:
    """Dense tangent stiffness (material + geometric), no boundary treatment."""
    lame = m.lame
    g = displacement_gradients(mesh, u)
    _, sigma = _strain_stress(lame, g)
    F = np.broadcast_to(I3, g.shape) + g
    # S[e,q,n,i,:,:] = sym(F^T (e_i x dN_n)); Mandel rows give B
    T1 = np.einsum("eqIa,qnb->eqnIab", F, mesh.dN)
    S = 0.5 * (T1 + np.swapaxes(T1, -1, -2))
    r2 = np.sqrt(2.0)
    B = np.stack(
        [
            S[..., 0, 0], S[..., 1, 1], S[..., 2, 2],
            r2 * S[..., 1, 2], r2 * S[..., 0, 2], r2 * S[..., 0, 1],
        ],
        axis=-1,
    )  # (ne, 8q, 8n, 3, 6)
    Hm = tensor3d.hooke(lame).mandel
    Kmat = mesh.detJ * np.einsum("eqniA,AB,eqmjB->enimj", B, Hm, B)
    G = mesh.detJ * np.einsum("qna,eqab,qmb->enm", mesh.dN, sigma, mesh.dN)
    Kgeo = np.einsum("enm,ij->enimj", G, I3)
    Ke = (Kmat + Kgeo).reshape(mesh.n_elem, 24, 24)
    Kg = np.zeros((mesh.n_dof, mesh.n_dof))
    for e in range(mesh.n_elem):
        idx = (3 * mesh.conn[e][:, None] + np.arange(3)).ravel()
        Kg[np.ix_(idx, idx)] += Ke[e]
    return Kg


def solve_newton_3d(
    m: SolidModel,
    steps: int = 3,
    tol: float = 1e-11,
    max_iter: int = 30,
) -> tuple[BoxMesh, np.ndarray]:
    """Continuation Newton solve for the 3D critical point."""
    mesh = BoxMesh(m)
    u = zero_displacement(mesh)
    free = mesh.free_dofs
    for k in range(1, steps + 1):
        mk = SolidModel(
            m.lx, m.ly, m.lz, m.nx, m.ny, m.nz, m.lame,
            (k / steps) * np.asarray(m.body_force, dtype=float),
            (k / steps) * np.asarray(m.traction, dtype=float),
        )
        for it in range(max_iter + 1):
            R = residual_3d(mk, mesh, u).ravel()
            if np.max(np.abs(R[free])) <= tol:
                break
            if it == max_iter:
                raise NonConvergence(
                    f"3D Newton stage {k}/{steps}: residual "
                    f"{np.max(np.abs(R[free])):.3e} after {max_iter} iterations"
                )
            Kg = hessian_3d(mk, mesh, u)
            try:
                du = np.linalg.solve(Kg[np.ix_(free, free)], -R[free])
            except np.linalg.LinAlgError as exc:
                raise SingularSystem(str(exc)) from exc
            u = u.copy()
            u.reshape(-1)[free] += du
    return mesh, u


def gradient_sup_norm(mesh: BoxMesh, u: np.ndarray) -> float:
    """Max over quadrature points of the largest |u_{i,j}| entry."""
    return float(np.max(np.abs(displacement_gradients(mesh, u))))


@dataclass
class Gap3DReport:
    """Certification record of the 3D duality principle on one box problem."""

    J_primal: float = 0.0
    J_dual: float = 0.0
    gap: float = 0.0
    K_used: float = 0.0
    K_max: float = 0.0
    mode: str = "identity"
    k_feasible: bool = False
    condition_max: float = 0.0
    condition_ok: bool = False
    residual_norm: float = 0.0
    constraint_residual_norm: float = 0.0
    min_pd_margin: float = 0.0
    min_hessian_z_eig: float = 0.0
    m_min_eig: float = 0.0
    local_min_passed: int = 0
    local_min_total: int = 0
    z_convex_passed: int = 0
    z_convex_total: int = 0
    seed: int = 0
    passed: bool = False
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, config_echo: dict | None = None) -> str:
        doc = {"version": "1.0", "config_echo": config_echo or {}}
        doc.update(self.to_dict())
        return json.dumps(doc, indent=2, sort_keys=True)


def certify_3d(
    m: SolidModel,
    K: float | None = None,
    seed: int = 0,
    mode: str = "identity",
    gap_tol: float = 1e-8,
    constraint_tol: float = 1e-9,
    residual_tol: float = 1e-11,
    n_local: int = 50,
    n_z_samples: int = 50,
    steps: int = 3,
) -> Gap3DReport:
    """End-to-end 3D certification: solve, construct duals at quadrature
    points, and check the gap, the weak constraints, and all pointwise bounds.

    Failures are recorded in the report rather than raised.
    """
    report = Gap3DReport(seed=seed, mode=mode)
    lame = m.lame
    try:
        mesh, u0 = solve_newton_3d(m, steps=steps, tol=residual_tol)
    except (NonConvergence, SingularSystem) as exc:
        report.errors.append(f"newton: {exc}")
        return report

    R0 = residual_3d(m, mesh, u0).ravel()
    report.residual_norm = float(np.max(np.abs(R0[mesh.free_dofs])))
    report.J_primal = energy_3d(m, mesh, u0)
    report.condition_max = gradient_sup_norm(mesh, u0)
    report.condition_ok = report.condition_max < 0.125
    if not report.condition_ok:
        report.errors.append(
            f"hypothesis: max |u_i,j| = {report.condition_max:.6f} >= 1/8"
        )
        return report

    report.K_max = tensor3d.admissible_k_max(lame, mode)
    if K is None:
        if report.K_max <= 0:
            report.errors.append("no admissible K: M tensor never positive definite")
            return report
        K = report.K_max * (1.0 - 1e-3)
    report.K_used = K
    _, report.m_min_eig = tensor3d.m_tensor_check(lame, K, mode)

    g_all = displacement_gradients(mesh, u0)
    flat = g_all.reshape(-1, 3, 3)
    duals = [tensor3d.construct_duals_pointwise(lame, K, gq) for gq in flat]
    sigmas = [v2 + z for (_, v2, z) in duals]

    report.min_pd_margin = min(tensor3d.pd_margin(s, K) for s in sigmas)
    report.k_feasible = report.m_min_eig > 0 and report.min_pd_margin >= 0
    if not report.k_feasible:
        report.errors.append(
            "K hypotheses infeasible: "
            f"m_min_eig={report.m_min_eig:.3e}, pd_margin={report.min_pd_margin:.3e}"
        )
        return report

    j_star = 0.0
    min_hz = np.inf
    for v1, v2, z in duals:
        j_star += tensor3d.f_star_3d_density(z, K)
        j_star -= tensor3d.g_star_k_density(v1, v2, z, lame, K)
        hz = tensor3d.dstar_hessian_z_3d(v1, v2, z, lame, K)
        min_hz = min(min_hz, tensor3d.min_eig_on_sym(hz))
    report.J_dual = float(j_star * mesh.detJ)
    report.gap = report.J_primal - report.J_dual
    report.min_hessian_z_eig = float(min_hz)

    flux = np.array([v1 + v2 for (v1, v2, _) in duals]).reshape(g_all.shape)
    Rdual = _internal_forces(mesh, flux) - _load_vector(m, mesh)
    Rdual[mesh.clamped_nodes] = 0.0
    report.constraint_residual_norm = float(
        np.max(np.abs(Rdual.ravel()[mesh.free_dofs]))
    )

    rng = np.random.default_rng(seed)
    passed = 0
    for _ in range(n_local):
        delta = np.zeros((mesh.n_nodes, 3))
        dv = rng.uniform(-1.0, 1.0, size=mesh.free_dofs.size)
        delta.reshape(-1)[mesh.free_dofs] = dv
        mx = np.max(np.abs(delta))
        if mx > 0:
            delta *= 1e-4 / mx
        if energy_3d(m, mesh, u0 + delta) >= report.J_primal - 1e-12:
            passed += 1
    report.local_min_passed = passed
    report.local_min_total = n_local

    # z-convexity sampling: symmetric perturbations of z at every point
    radius = min(1e-3, 0.25 * report.min_pd_margin + 1e-12)
    center = report.J_dual
    z_passed = 0
    for _ in range(n_z_samples):
        val = 0.0
        ok = True
        for v1, v2, z in duals:
            dz = tensor3d.sym(rng.uniform(-1.0, 1.0, size=(3, 3)))
            mx = np.max(np.abs(dz))
            if mx > 0:
                dz *= radius / mx
            try:
                val += tensor3d.f_star_3d_density(z + dz, K)
                val -= tensor3d.g_star_k_density(v1, v2, z + dz, lame, K)
            except NotPositiveDefinite:
                ok = False
                break
        if ok and val * mesh.detJ >= center - 1e-10:
            z_passed += 1
    report.z_convex_passed = z_passed
    report.z_convex_total = n_z_samples

    report.passed = (
        abs(report.gap) <= gap_tol * (1.0 + abs(report.J_primal))
        and report.constraint_residual_norm <= constraint_tol
        and report.condition_ok
        and report.k_feasible
        and report.min_hessian_z_eig >= report.m_min_eig - 1e-10
        and report.local_min_passed == n_local
        and report.z_convex_passed == n_z_samples
        and not report.errors
    )
    return report
