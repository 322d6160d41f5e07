"""Unit tests for the pointwise 3D tensor algebra and conjugate densities."""

import numpy as np
import pytest

from elastodual import tensor3d
from elastodual.errors import NotPositiveDefinite
from elastodual.tensor3d import I3, LameParams

from conftest import golden_max, random_rotation

P11 = LameParams(1.0, 1.0)


def _random_sym(rng, scale=1.0):
    return tensor3d.sym(scale * rng.uniform(-1.0, 1.0, (3, 3)))


class TestMandel:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            S = _random_sym(rng)
            assert np.allclose(
                tensor3d.mandel_to_sym(tensor3d.sym_to_mandel(S)), S
            )

    def test_inner_product_preserved(self):
        rng = np.random.default_rng(1)
        S, T = _random_sym(rng), _random_sym(rng)
        assert np.sum(S * T) == pytest.approx(
            float(tensor3d.sym_to_mandel(S) @ tensor3d.sym_to_mandel(T))
        )


class TestHooke:
    def test_trace_response(self):
        p = LameParams(2.0, 0.5)
        H = tensor3d.hooke(p)
        assert np.allclose(H.apply(I3), (3 * p.lam + 2 * p.mu) * I3)

    def test_component_values(self):
        p = LameParams(1.5, 0.7)
        full = tensor3d.hooke(p).full
        assert full[0, 0, 0, 0] == pytest.approx(p.lam + 2 * p.mu)
        assert full[0, 0, 1, 1] == pytest.approx(p.lam)
        assert full[0, 1, 0, 1] == pytest.approx(p.mu)

    def test_mandel_spd(self):
        H = tensor3d.hooke(P11)
        assert np.all(np.linalg.eigvalsh(H.mandel) > 0)

    def test_closed_form_apply(self):
        rng = np.random.default_rng(2)
        p = LameParams(0.8, 1.2)
        H = tensor3d.hooke(p)
        for _ in range(10):
            S = _random_sym(rng)
            assert np.allclose(H.apply(S), tensor3d.hooke_apply(p, S))

    def test_isotropic_lower_bound(self):
        rng = np.random.default_rng(3)
        p = LameParams(1.0, 0.6)
        for _ in range(50):
            S = _random_sym(rng)
            quad = float(np.sum(S * tensor3d.hooke_apply(p, S)))
            assert quad >= 2.0 * p.mu * float(np.sum(S * S)) - 1e-12

    def test_invalid_lame(self):
        with pytest.raises(ValueError):
            LameParams(1.0, 0.0)
        with pytest.raises(ValueError):
            LameParams(-1.0, 1.0)


class TestHookeInverse:
    def test_two_sided_inverse(self):
        rng = np.random.default_rng(4)
        p = LameParams(1.3, 0.9)
        Hb = tensor3d.hooke_inverse(p)
        for _ in range(100):
            S = _random_sym(rng)
            assert np.max(np.abs(Hb.apply(tensor3d.hooke_apply(p, S)) - S)) <= 1e-12
            assert np.max(
                np.abs(tensor3d.hooke_apply(p, Hb.apply(S)) - S)
            ) <= 1e-12

    def test_trace_inverse(self):
        p = LameParams(2.0, 1.0)
        Hb = tensor3d.hooke_inverse(p)
        assert np.allclose(Hb.apply(I3), I3 / (3 * p.lam + 2 * p.mu))

    def test_closed_form_entries(self):
        p = LameParams(1.7, 0.6)
        lam, mu = p.lam, p.mu
        d = I3
        expected = (1.0 / (4.0 * mu)) * (
            np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
        ) - lam / (2.0 * mu * (3 * lam + 2 * mu)) * np.einsum(
            "ij,kl->ijkl", d, d
        )
        assert np.max(np.abs(tensor3d.hooke_inverse(p).full - expected)) <= 1e-12

    def test_closed_form_apply_agrees(self):
        rng = np.random.default_rng(5)
        p = LameParams(0.4, 1.1)
        Hb = tensor3d.hooke_inverse(p)
        for _ in range(10):
            S = _random_sym(rng)
            assert np.allclose(Hb.apply(S), tensor3d.hooke_inverse_apply(p, S))


class TestGreenStrain:
    def test_zero(self):
        assert np.all(tensor3d.green_strain(np.zeros((3, 3))) == 0.0)

    def test_rigid_rotations_annihilated(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            R = random_rotation(rng)
            E = tensor3d.green_strain(R - I3)
            assert np.max(np.abs(E)) <= 1e-12

    def test_uniaxial(self):
        E = tensor3d.green_strain(np.diag([0.1, 0.0, 0.0]))
        assert E[0, 0] == pytest.approx(0.105)
        assert np.max(np.abs(E - np.diag([0.105, 0, 0]))) <= 1e-15

    def test_frame_indifference_invariants(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            g = 0.1 * rng.uniform(-1, 1, (3, 3))
            R = random_rotation(rng)
            g_rot = R @ (I3 + g) - I3
            E1 = tensor3d.green_strain(g)
            E2 = tensor3d.green_strain(g_rot)
            for f in (np.trace, lambda M: np.trace(M @ M), np.linalg.det):
                assert abs(f(E1) - f(E2)) <= 1e-12


class TestStress:
    def test_zero_and_rotation(self):
        rng = np.random.default_rng(8)
        assert np.all(tensor3d.stress(P11, np.zeros((3, 3))) == 0.0)
        R = random_rotation(rng)
        assert np.max(np.abs(tensor3d.stress(P11, R - I3))) <= 1e-12

    def test_uniaxial_value(self):
        sigma = tensor3d.stress(P11, np.diag([0.1, 0.0, 0.0]))
        expected = 0.105 * I3 + 2.0 * np.diag([0.105, 0.0, 0.0])
        assert np.allclose(sigma, expected)


class TestConstructDualsPointwise:
    def test_zero(self):
        v1, v2, z = tensor3d.construct_duals_pointwise(P11, 0.5, np.zeros((3, 3)))
        assert np.all(v1 == 0) and np.all(v2 == 0) and np.all(z == 0)

    def test_identities(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = 0.1 * rng.uniform(-1, 1, (3, 3))
            v1, v2, z = tensor3d.construct_duals_pointwise(P11, 0.8, g)
            sigma = tensor3d.stress(P11, g)
            assert np.max(np.abs(z + v2 - sigma)) <= 1e-14
            assert np.max(np.abs(v1 + v2 - (I3 + g) @ sigma)) <= 1e-13

    def test_1d_embedding(self):
        # lam = 0, 2 mu = E makes the (1,1) component match the 1D bar
        E_mod = 1.0
        p = LameParams(0.0, E_mod / 2.0)
        ux, K = 0.1, 0.5
        v1, v2, z = tensor3d.construct_duals_pointwise(
            p, K, np.diag([ux, 0.0, 0.0])
        )
        assert z[0, 0] == pytest.approx(K * ux)
        assert v2[0, 0] == pytest.approx(
            E_mod * (ux + 0.5 * ux**2) - K * ux
        )
        assert v1[0, 0] == pytest.approx((z[0, 0] + v2[0, 0] + K) * ux)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            tensor3d.construct_duals_pointwise(P11, 0.0, np.zeros((3, 3)))


class TestPdMargin:
    def test_zero(self):
        assert tensor3d.pd_margin(np.zeros((3, 3)), 1.0) == pytest.approx(0.5)

    def test_shifted_identity(self):
        K = 1.0
        assert tensor3d.pd_margin(-K / 4.0 * I3, K) == pytest.approx(K / 4.0)

    def test_characteristic_polynomial_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            S = _random_sym(rng)
            K = 0.7
            M = tensor3d.sym(S) + 0.5 * K * I3
            coeffs = np.poly(M)
            roots = np.sort(np.roots(coeffs).real)
            assert abs(tensor3d.pd_margin(S, K) - roots[0]) <= 1e-12


class TestConjugateDensities:
    def test_f_star_values(self):
        assert tensor3d.f_star_3d_density(np.zeros((3, 3)), 1.0) == 0.0
        assert tensor3d.f_star_3d_density(I3, 0.5) == pytest.approx(3.0)

    def test_f_star_componentwise(self):
        rng = np.random.default_rng(11)
        z = rng.uniform(-1, 1, (3, 3))
        K = 0.9
        expected = sum(z[i, j] ** 2 / (2 * K) for i in range(3) for j in range(3))
        assert tensor3d.f_star_3d_density(z, K) == pytest.approx(expected)

    def test_g_star_zero_and_identity(self):
        Z = np.zeros((3, 3))
        assert tensor3d.g_star_k_density(Z, Z, Z, P11, 1.0) == 0.0
        K = 0.5
        assert tensor3d.g_star_k_density(I3, Z, Z, P11, K) == pytest.approx(
            1.5 / K
        )

    def test_not_positive_definite(self):
        Z = np.zeros((3, 3))
        with pytest.raises(NotPositiveDefinite):
            tensor3d.g_star_k_density(Z, -2.0 * I3, Z, P11, 1.0)

    def test_coordinate_ascent_does_not_exceed(self):
        rng = np.random.default_rng(12)
        p = P11
        K = 1.0
        g0 = 0.05 * rng.uniform(-1, 1, (3, 3))
        v1, v2, z = tensor3d.construct_duals_pointwise(p, K, g0)
        closed = tensor3d.g_star_k_density(v1, v2, z, p, K)
        s = v2 + z

        def phi(a, b):
            X = a + 0.5 * b.T @ b
            return float(
                np.sum(a * s) + np.sum(b * v1)
                - 0.5 * np.sum(X * tensor3d.hooke_apply(p, X))
                - 0.5 * K * np.sum(b * b)
            )

        Ainv = np.linalg.inv(s + K * I3)
        b = v1 @ Ainv
        a = tensor3d.hooke_inverse_apply(p, s) - 0.5 * b.T @ b
        assert phi(a, b) == pytest.approx(closed, abs=1e-12)
        for _ in range(8):
            for M in (a, b):
                for i in range(3):
                    for j in range(3):
                        x0 = M[i, j]

                        def slice_f(x, M=M, i=i, j=j):
                            old = M[i, j]
                            M[i, j] = x
                            val = phi(a, b)
                            M[i, j] = old
                            return val

                        M[i, j] = golden_max(slice_f, x0 - 0.5, x0 + 0.5)
        assert phi(a, b) <= closed + 1e-6


class TestDstarHessianZ3D:
    def test_v1_zero(self):
        Z = np.zeros((3, 3))
        K = 0.5
        hz = tensor3d.dstar_hessian_z_3d(Z, Z, Z, P11, K)
        expected = np.eye(9) / K - tensor3d.hooke_inverse(P11).as_matrix9()
        assert np.max(np.abs(hz - expected)) <= 1e-14

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(13)
        p = P11
        K = 1.0
        g0 = 0.05 * rng.uniform(-1, 1, (3, 3))
        v1, v2, z = tensor3d.construct_duals_pointwise(p, K, g0)
        hz = tensor3d.dstar_hessian_z_3d(v1, v2, z, p, K)

        def density(zz):
            return tensor3d.f_star_3d_density(
                zz, K
            ) - tensor3d.g_star_k_density(v1, v2, zz, p, K)

        eps = 1e-4
        fd = np.zeros((9, 9))
        dirs = [np.eye(9)[k].reshape(3, 3) for k in range(9)]
        base = density(z)
        for aa in range(9):
            for bb in range(9):
                da, db = dirs[aa], dirs[bb]
                fd[aa, bb] = (
                    density(z + eps * da + eps * db)
                    - density(z + eps * da - eps * db)
                    - density(z - eps * da + eps * db)
                    + density(z - eps * da - eps * db)
                ) / (4.0 * eps**2)
        assert np.max(np.abs(fd - hz)) <= 1e-5 * (1.0 + np.max(np.abs(hz)))

    def test_bounded_below_by_m_tensor(self):
        rng = np.random.default_rng(14)
        p = P11
        mode = "identity"
        K = tensor3d.admissible_k_max(p, mode) * 0.999
        _, m_eig = tensor3d.m_tensor_check(p, K, mode)
        for _ in range(20):
            g0 = rng.uniform(-0.12, 0.12, (3, 3))
            # keep the spectral norm within the range where the Hessian
            # bound is an operator-norm consequence of the hypotheses
            smax = float(np.linalg.norm(g0, 2))
            g0 *= min(1.0, np.sqrt(3.0 / 64.0) / smax)
            v1, v2, z = tensor3d.construct_duals_pointwise(p, K, g0)
            if tensor3d.pd_margin(v2 + z, K) < 0:
                continue
            hz = tensor3d.dstar_hessian_z_3d(v1, v2, z, p, K)
            assert tensor3d.min_eig_on_sym(hz) >= m_eig - 1e-12


class TestMTensor:
    def test_large_k_negative(self):
        for mode in tensor3d.M_TENSOR_MODES:
            _, eig = tensor3d.m_tensor_check(P11, 1e6, mode)
            assert eig < 0.0

    def test_below_threshold_positive(self):
        for mode in tensor3d.M_TENSOR_MODES:
            k_max = tensor3d.admissible_k_max(P11, mode)
            _, eig = tensor3d.m_tensor_check(P11, 0.5 * k_max, mode)
            assert eig > 0.0

    def test_identity_mode_analytic_value(self):
        # for lam = mu = 1 the binding constraint is the deviatoric
        # eigenvalue of Hbar (1/(2 mu)): (1 - 3/32)/K = 1/2 at K = 29/16
        assert tensor3d.admissible_k_max(P11, "identity") == pytest.approx(
            29.0 / 16.0, abs=1e-9
        )

    def test_spherical_mode_analytic_value(self):
        # binding constraint is deviatoric: 1/K = 1/(2 mu) at K = 2 mu
        assert tensor3d.admissible_k_max(P11, "spherical") == pytest.approx(
            2.0, abs=1e-9
        )

    def test_bisection_matches_grid_sweep(self):
        for mode in tensor3d.M_TENSOR_MODES:
            k_bis = tensor3d.admissible_k_max(P11, mode)
            ks = np.linspace(1e-3, 4.0, 2000)
            eigs = np.array(
                [tensor3d.m_tensor_check(P11, k, mode)[1] for k in ks]
            )
            idx = int(np.argmax(eigs <= 0.0))
            k0, k1 = ks[idx - 1], ks[idx]
            e0, e1 = eigs[idx - 1], eigs[idx]
            k_grid = k0 - e0 * (k1 - k0) / (e1 - e0)
            assert abs(k_bis - k_grid) <= 1e-4

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            tensor3d.m_tensor(P11, 1.0, "bogus")
