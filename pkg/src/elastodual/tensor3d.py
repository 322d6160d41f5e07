"""Pointwise 3D tensor algebra: isotropic stiffness tensor and its inverse,
Green strain and stress, the closed-form conjugate densities, the pointwise
dual-field construction, and the positive-definiteness checks that gate the
3D duality certificate.

Fourth-order tensors carry a 6x6 Mandel representation (orthonormal on
symmetric arguments, sqrt(2) scaling on shear slots) alongside a full
3x3x3x3 array for contractions with non-symmetric arguments.

Convention note: the conjugate term in v1 is tr(A^-1 v1^T v1) with
A = v2 + z + K*I, the dual construction right-multiplies the displacement
gradient, v1 = grad_u (sigma + K*I), and z pairs with the full gradient.
This is the unique combination under which the stationarity system, the
first-Piola identity v1 + v2 = (I + grad_u) sigma, and the discrete zero-gap
chain all close exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefinite, SingularHooke

I3 = np.eye(3)

#: interpretation modes for the delta term of the M tensor
M_TENSOR_MODES = ("identity", "spherical")

_MANDEL_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
_SQRT2 = np.sqrt(2.0)


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def skew(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - M.T)


def sym_to_mandel(S: np.ndarray) -> np.ndarray:
    """6-vector Mandel representation of a symmetric 3x3 tensor."""
    return np.array(
        [S[0, 0], S[1, 1], S[2, 2],
         _SQRT2 * S[1, 2], _SQRT2 * S[0, 2], _SQRT2 * S[0, 1]]
    )


def mandel_to_sym(v: np.ndarray) -> np.ndarray:
    S = np.diag(v[:3]).astype(float)
    S[1, 2] = S[2, 1] = v[3] / _SQRT2
    S[0, 2] = S[2, 0] = v[4] / _SQRT2
    S[0, 1] = S[1, 0] = v[5] / _SQRT2
    return S


def _mandel_basis_9() -> np.ndarray:
    """9x6 matrix whose columns are the orthonormal symmetric basis tensors,
    flattened row-major."""
    cols = []
    for a, b in _MANDEL_PAIRS:
        T = np.zeros((3, 3))
        if a == b:
            T[a, b] = 1.0
        else:
            T[a, b] = T[b, a] = 1.0 / _SQRT2
        cols.append(T.reshape(9))
    return np.array(cols).T


MANDEL_BASIS_9 = _mandel_basis_9()


@dataclass(frozen=True)
class LameParams:
    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 3.0 * self.lam + 2.0 * self.mu > 0:
            raise ValueError("3*lam + 2*mu must be positive")


@dataclass(frozen=True)
class Tensor4Sym:
    """Fourth-order tensor with minor symmetries, stored in both forms."""

    full: np.ndarray  # (3,3,3,3)
    mandel: np.ndarray = field(init=False, repr=False)  # (6,6)

    def __post_init__(self):
        B = MANDEL_BASIS_9
        M9 = self.full.reshape(9, 9)
        object.__setattr__(self, "mandel", B.T @ M9 @ B)

    def apply(self, M: np.ndarray) -> np.ndarray:
        """Contraction T_ijkl M_kl (full representation)."""
        return np.einsum("ijkl,kl->ij", self.full, M)

    def as_matrix9(self) -> np.ndarray:
        return self.full.reshape(9, 9)

    def min_eig_sym(self) -> float:
        """Smallest eigenvalue of the action restricted to symmetric tensors."""
        return float(np.linalg.eigvalsh(0.5 * (self.mandel + self.mandel.T))[0])


def sym9(M9: np.ndarray) -> np.ndarray:
    return 0.5 * (M9 + M9.T)


def min_eig_on_sym(M9: np.ndarray) -> float:
    """Smallest eigenvalue of a 9x9 operator restricted to symmetric arguments."""
    B = MANDEL_BASIS_9
    return float(np.linalg.eigvalsh(sym9(B.T @ M9 @ B))[0])


def hooke(p: LameParams) -> Tensor4Sym:
    """Isotropic stiffness lam*d_ij*d_kl + mu*(d_ik*d_jl + d_il*d_jk)."""
    d = I3
    full = (
        p.lam * np.einsum("ij,kl->ijkl", d, d)
        + p.mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
    )
    return Tensor4Sym(full=full)


def hooke_inverse(p: LameParams) -> Tensor4Sym:
    """Inverse of the stiffness on symmetric tensors, from the 6x6 Mandel form."""
    H = hooke(p)
    try:
        Minv = np.linalg.inv(H.mandel)
    except np.linalg.LinAlgError as exc:
        raise SingularHooke(str(exc)) from exc
    # rebuild the full form with minor symmetries from the Mandel inverse
    B = MANDEL_BASIS_9
    full = (B @ Minv @ B.T).reshape(3, 3, 3, 3)
    return Tensor4Sym(full=full)


def hooke_apply(p: LameParams, M: np.ndarray) -> np.ndarray:
    """H : M = lam*tr(M)*I + 2*mu*sym(M), in closed form."""
    return p.lam * np.trace(M) * I3 + 2.0 * p.mu * sym(M)


def hooke_inverse_apply(p: LameParams, S: np.ndarray) -> np.ndarray:
    """Closed-form inverse action on a symmetric tensor."""
    return sym(S) / (2.0 * p.mu) - p.lam * np.trace(S) * I3 / (
        2.0 * p.mu * (3.0 * p.lam + 2.0 * p.mu)
    )


def green_strain(g: np.ndarray) -> np.ndarray:
    """E = (g + g^T + g^T g) / 2 for a displacement gradient g."""
    return 0.5 * (g + g.T + g.T @ g)


def stress(p: LameParams, g: np.ndarray) -> np.ndarray:
    """Second Piola stress H : green_strain(g)."""
    return hooke_apply(p, green_strain(g))


def construct_duals_pointwise(
    p: LameParams, K: float, g0: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise dual triple (v1, v2, z) at a displacement gradient g0.

    z = K*g0, v2 = sigma - z, v1 = g0 @ (sigma + K*I).  The identities
    z + v2 = sigma and v1 + v2 = (I + g0) sigma hold to rounding.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    sigma = stress(p, g0)
    z = K * g0
    v2 = sigma - z
    v1 = g0 @ (sigma + K * I3)
    return v1, v2, z


def _denominator(v2: np.ndarray, z: np.ndarray, K: float) -> np.ndarray:
    return v2 + z + K * I3


def _require_pd(A: np.ndarray) -> np.ndarray:
    """PD check of the symmetric part; returns the inverse of A."""
    margin = float(np.linalg.eigvalsh(sym(A))[0])
    if margin <= 0.0:
        raise NotPositiveDefinite(
            f"v2 + z + K*I has smallest symmetric eigenvalue {margin:.6e}",
            margin=margin,
        )
    return np.linalg.inv(A)


def pd_margin(S: np.ndarray, K: float) -> float:
    """Margin of the hypothesis S + K*I >= (K/2)*I, i.e. eigmin(S + K/2*I)."""
    return float(np.linalg.eigvalsh(sym(S) + 0.5 * K * I3)[0])


def f_star_3d_density(z: np.ndarray, K: float) -> float:
    """Conjugate density z:z / (2K)."""
    if not K > 0:
        raise ValueError("K must be positive")
    return float(np.sum(z * z) / (2.0 * K))


def g_star_k_density(
    v1: np.ndarray, v2: np.ndarray, z: np.ndarray, p: LameParams, K: float
) -> float:
    """Closed-form density of the perturbed conjugate:
    1/2 tr(A^-1 v1^T v1) + 1/2 (v2+z) : Hbar : (v2+z), A = v2 + z + K*I."""
    A = _denominator(v2, z, K)
    Ainv = _require_pd(A)
    S = v2 + z
    return float(
        0.5 * np.trace(Ainv @ v1.T @ v1)
        + 0.5 * np.sum(S * hooke_inverse_apply(p, S))
    )


def dstar_hessian_z_3d(
    v1: np.ndarray, v2: np.ndarray, z: np.ndarray, p: LameParams, K: float
) -> np.ndarray:
    """9x9 second derivative of the dual density in z:
    D/K - (inverse-cubed weighted v1 outer product, symmetrized) - Hbar."""
    A = _denominator(v2, z, K)
    if np.max(np.abs(A - A.T)) > 1e-9:
        raise ValueError("Hessian assembly expects a symmetric denominator")
    Ainv = _require_pd(A)
    Y = Ainv @ v1.T @ v1 @ Ainv
    T = 0.5 * (
        np.einsum("jk,li->ijkl", Ainv, Y) + np.einsum("jk,li->ijkl", Y, Ainv)
    ).reshape(9, 9)
    Hbar9 = hooke_inverse(p).as_matrix9()
    return np.eye(9) / K - T - Hbar9


def m_tensor(p: LameParams, K: float, mode: str = "identity") -> np.ndarray:
    """9x9 form of the K-feasibility tensor D/K - (3/(32K))*delta-term - Hbar.

    ``mode`` picks the reading of the delta term: "identity" uses the
    fourth-order identity D, "spherical" uses the trace projector
    delta_ij*delta_kl.
    """
    if mode not in M_TENSOR_MODES:
        raise ValueError(f"mode must be one of {M_TENSOR_MODES}")
    if not K > 0:
        raise ValueError("K must be positive")
    D9 = np.eye(9)
    if mode == "identity":
        mid = (3.0 / (32.0 * K)) * D9
    else:
        i9 = I3.reshape(9)
        mid = (3.0 / (32.0 * K)) * np.outer(i9, i9)
    return D9 / K - mid - hooke_inverse(p).as_matrix9()


def m_tensor_check(
    p: LameParams, K: float, mode: str = "identity"
) -> tuple[np.ndarray, float]:
    """Assembled M tensor and its smallest eigenvalue on symmetric arguments."""
    M9 = m_tensor(p, K, mode)
    return M9, min_eig_on_sym(M9)


def admissible_k_max(
    p: LameParams, mode: str = "identity", tol: float = 1e-10
) -> float:
    """Largest K for which the M tensor stays positive definite (bisection).

    The symmetric-subspace margin is strictly decreasing in K, so the
    feasible set is an interval (0, K_max).
    """
    lo = 1e-8
    if m_tensor_check(p, lo, mode)[1] <= 0:
        return 0.0
    hi = 1.0
    while m_tensor_check(p, hi, mode)[1] > 0:
        hi *= 2.0
        if hi > 1e12:
            return np.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if m_tensor_check(p, mid, mode)[1] > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
