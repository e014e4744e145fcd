import numpy as np
import pytest

from iqcopt.algorithms import SectorBounds
from iqcopt.multipliers import (ZamesFalbParameters, ZamesFalbStructure,
                                factorize, kernel_transfer, m_delta_matrix,
                                membership_constraints, multiplier_value,
                                psi_delta_realization, verify_membership)
from iqcopt.statespace import eval_frequency


def params_from_scalars(values, p=1):
    return ZamesFalbParameters(tuple(np.eye(p) * v for v in values))


class TestMembership:
    def test_feasible_causal_pair(self):
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 0.9)
        # sums: 1 - 0.5*0.9 = 0.55 and 1 - 0.5/0.9 ~ 0.444
        assert verify_membership(params_from_scalars([-0.5, 1.0]), st)

    def test_infeasible_causal_pair(self):
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 0.5)
        # 1 - 0.6/0.5 = -0.2 < 0
        assert not verify_membership(params_from_scalars([-0.6, 1.0]), st)

    def test_degenerate_zero_order(self):
        st = ZamesFalbStructure(0, 0, 1, "unstructured", 0.7)
        assert verify_membership(params_from_scalars([3.0]), st)
        assert not verify_membership(params_from_scalars([-1.0]), st)

    def test_positive_offdiagonal_tap_rejected(self):
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 0.9)
        assert not verify_membership(params_from_scalars([0.1, 1.0]), st)

    def test_cone_scaling(self):
        st = ZamesFalbStructure(2, 1, 1, "unstructured", 0.85)
        vals = [-0.1, -0.2, 1.0, -0.3]
        assert verify_membership(params_from_scalars(vals), st)
        assert verify_membership(params_from_scalars([7.5 * v for v in vals]), st)

    def test_rho_one_is_classical(self):
        st = ZamesFalbStructure(2, 0, 1, "unstructured", 1.0)
        cons = membership_constraints(st)
        sums = [c for c in cons if c.label.startswith(("rowsum", "colsum"))]
        # with rho = 1 both weighted sums collapse to the plain sum
        np.testing.assert_allclose(sums[0].coeffs, sums[1].coeffs)

    def test_set_nesting(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            p = 2
            rho = rng.uniform(0.6, 1.0)
            m0 = rng.uniform(0.5, 2.0)
            m1 = -rng.uniform(0.0, m0 * min(rho, 1 / rho) * 0.99)
            params = params_from_scalars([m1, m0], p=p)
            un = ZamesFalbStructure(1, 0, p, "unstructured", rho)
            nr = ZamesFalbStructure(1, 0, p, "nonrepeated", rho)
            rp = ZamesFalbStructure(1, 0, p, "repeated", rho)
            assert verify_membership(params, un)
            assert verify_membership(params, nr)
            assert verify_membership(params, rp)

    def test_repeated_m0_offdiagonal_sign(self):
        st = ZamesFalbStructure(0, 0, 2, "repeated", 1.0)
        good = ZamesFalbParameters((np.array([[1.0, -0.2], [-0.3, 1.0]]),))
        bad = ZamesFalbParameters((np.array([[1.0, 0.2], [-0.3, 1.0]]),))
        assert verify_membership(good, st)
        assert not verify_membership(bad, st)

    def test_nonrepeated_requires_diagonal(self):
        st = ZamesFalbStructure(0, 0, 2, "nonrepeated", 1.0)
        full = ZamesFalbParameters((np.array([[1.0, -0.1], [0.0, 1.0]]),))
        assert not verify_membership(full, st)

    def test_nonrepeated_percoordinate_sums(self):
        st = ZamesFalbStructure(1, 0, 2, "nonrepeated", 0.5)
        # coordinate 2 violates its own weighted sum
        M1 = np.diag([-0.1, -0.9])
        M0 = np.diag([1.0, 1.0])
        assert not verify_membership(ZamesFalbParameters((M1, M0)), st)


class TestFactorization:
    def test_dimensions(self):
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 0.9)
        fac = factorize(params_from_scalars([-0.4, 1.0]), st, SectorBounds(1, 10))
        assert fac.M_Delta.shape == (5, 5)
        assert fac.psi_Delta.nx == 1
        assert fac.psi_Delta.ny == 5
        assert fac.psi_Delta.nu == 2

    def test_sector_only_matches_direct_product(self):
        st = ZamesFalbStructure(0, 0, 1, "unstructured", 1.0)
        bounds = SectorBounds(1.0, 10.0)
        params = params_from_scalars([1.0])
        fac = factorize(params, st, bounds)
        W = fac.W_hat
        expected = W.T @ np.array([[0.0, 1.0], [1.0, 0.0]]) @ W
        for z in np.exp(1j * np.linspace(0, np.pi, 7)):
            psi = eval_frequency(fac.psi_Delta, z)
            got = psi.conj().T @ fac.M_Delta @ psi
            np.testing.assert_allclose(got, expected, atol=1e-12)

    @pytest.mark.parametrize("p", [1, 2])
    def test_identity_random_draws(self, p):
        rng = np.random.default_rng(2024)
        bounds = SectorBounds(0.5, 7.0)
        st = ZamesFalbStructure(2, 1, p, "repeated", 0.8)
        zs = np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
        for _ in range(50 if p == 1 else 10):
            mats = []
            for i in st.indices():
                M = -rng.uniform(0.0, 0.2, size=(p, p))
                if i == 0:
                    M = M + np.diag(rng.uniform(1.0, 2.0, size=p))
                mats.append(M)
            params = ZamesFalbParameters(tuple(mats))
            fac = factorize(params, st, bounds)
            for z in zs[:16]:
                psi = eval_frequency(fac.psi_Delta, z)
                lhs = psi.conj().T @ fac.M_Delta @ psi
                rhs = multiplier_value(params, st, bounds, z)
                assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_kernel_transfer(self):
        st = ZamesFalbStructure(1, 1, 1, "unstructured", 1.0)
        params = params_from_scalars([-0.25, 1.0, -0.5])
        z = np.exp(0.3j)
        want = -0.25 / z + 1.0 - 0.5 * z
        got = kernel_transfer(params, st, z)[0, 0]
        assert got == pytest.approx(want)

    def test_m_delta_symmetric(self):
        st = ZamesFalbStructure(2, 2, 2, "repeated", 0.9)
        rng = np.random.default_rng(1)
        mats = tuple(rng.normal(size=(2, 2)) for _ in st.indices())
        MD = m_delta_matrix(ZamesFalbParameters(mats), st)
        np.testing.assert_allclose(MD, MD.T, atol=0)

    def test_psi_state_count(self):
        st = ZamesFalbStructure(3, 2, 2, "unstructured", 1.0)
        psi = psi_delta_realization(st, SectorBounds(1.0, 4.0))
        assert psi.nx == (3 + 2) * 2
        assert psi.ny == 2 * (4 + 3 + 2)
