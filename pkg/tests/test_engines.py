import numpy as np
import pytest

from iqcopt.algorithms import SectorBounds, make_named
from iqcopt.engines import (BisectionConfig, certify_h2, certify_rate,
                            certify_structured_rate, fundamental_lower_bound,
                            h2_norm_linear, synthesize_convex, verify_fdi)
from iqcopt.errors import NotCertifiable
from iqcopt.lmi import RateCertificate, assemble_rate_for
from iqcopt.multipliers import ZamesFalbStructure
from iqcopt.plantbuild import build_rate_plant
from iqcopt.sdp import solve

BOUNDS10 = SectorBounds(1.0, 10.0)
ST = ZamesFalbStructure(1, 0, 1, "unstructured", 1.0)


class TestCertifyRate:
    def test_gd_matches_table(self):
        res = certify_rate(make_named("gd", BOUNDS10), BOUNDS10, ST)
        assert res.value == pytest.approx(9.0 / 11.0, abs=1e-3)
        assert res.bracket[0] <= res.value <= res.bracket[1] + 1e-12

    def test_bracket_invariant(self):
        res = certify_rate(make_named("gd", BOUNDS10), BOUNDS10, ST)
        # every logged probe below the final value must be infeasible
        for rho, feas in res.log:
            if rho < res.value - 1e-12:
                assert not feas

    def test_hb_not_certifiable_at_large_kappa(self):
        bounds = SectorBounds(1.0, 100.0)
        with pytest.raises(NotCertifiable):
            certify_rate(make_named("hb", bounds), bounds, ST)

    def test_hb_certifiable_at_small_kappa(self):
        bounds = SectorBounds(1.0, 2.0)
        res = certify_rate(make_named("hb", bounds), bounds, ST)
        assert res.value < 1.0

    def test_above_fundamental_lower_bound(self):
        for kind in ("gd", "nm", "tmm"):
            res = certify_rate(make_named(kind, BOUNDS10), BOUNDS10, ST)
            assert res.value >= fundamental_lower_bound(BOUNDS10) - 1e-3

    def test_larger_multiplier_class_never_hurts(self):
        bounds = SectorBounds(1.0, 30.0)
        algo = make_named("nm", bounds)
        small = certify_rate(algo, bounds, ZamesFalbStructure(1, 0, 1)).value
        large = certify_rate(algo, bounds, ZamesFalbStructure(3, 1, 1)).value
        assert large <= small + 2e-4


class TestCertifyH2:
    def test_linear_limit_matches_oracle(self):
        bounds = SectorBounds(2.0, 2.0)
        gd = make_named("gd", bounds)
        res = certify_h2(gd, bounds, ST)
        oracle = h2_norm_linear(gd.nominal_matrix(2.0), gd.B, gd.D)
        assert res.value == pytest.approx(oracle, rel=0.01)

    def test_finite_for_gd(self):
        bounds = SectorBounds(1.0, 100.0)
        res = certify_h2(make_named("gd", bounds), bounds,
                         ZamesFalbStructure(4, 0, 1))
        assert np.isfinite(res.value) and res.value > 0


class TestVerifyFdi:
    def test_returned_certificates_pass(self):
        res = certify_rate(make_named("tmm", BOUNDS10), BOUNDS10, ST)
        cert = res.certificate
        plant = build_rate_plant(make_named("tmm", BOUNDS10), BOUNDS10,
                                 cert.structure, cert.rho)
        rep = verify_fdi(cert, plant)
        assert rep.ok and rep.worst_eig < 0

    def test_perturbed_certificate_usually_fails(self):
        res = certify_rate(make_named("gd", BOUNDS10), BOUNDS10, ST)
        cert = res.certificate
        plant = build_rate_plant(make_named("gd", BOUNDS10), BOUNDS10,
                                 cert.structure, cert.rho)
        wrecked = RateCertificate(
            P=cert.P + 0.5 * np.linalg.norm(cert.P) * np.eye(cert.P.shape[0]),
            zf=cert.zf, rho=cert.rho, structure=cert.structure)
        # smoke test only: P does not enter the FDI, but the multiplier does
        rep = verify_fdi(wrecked, plant)
        assert isinstance(rep.ok, bool)

    def test_sector_only_linear_limit(self):
        bounds = SectorBounds(1.0, 1.0)
        gd = make_named("gd", bounds)
        st0 = ZamesFalbStructure(0, 0, 1, "unstructured", 1.0)
        res = certify_rate(gd, bounds, st0,
                           BisectionConfig(rho_lo=0.3, tol=1e-2))
        plant = build_rate_plant(gd, bounds, res.certificate.structure,
                                 res.certificate.rho)
        assert verify_fdi(res.certificate, plant).ok


class TestSynthesizeConvex:
    def test_round_trip_certification(self):
        res = synthesize_convex(2, 1, BOUNDS10, 0.95)
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 0.95)
        asm = assemble_rate_for(res.algo, BOUNDS10, st, 0.95)
        assert solve(asm.problem).certified

    def test_infeasible_below_lower_bound(self):
        rho_bad = fundamental_lower_bound(BOUNDS10) - 0.01
        with pytest.raises(NotCertifiable):
            synthesize_convex(2, 1, BOUNDS10, rho_bad)

    def test_perf_gamma_reported(self):
        bounds = SectorBounds(1.0, 50.0)
        res = synthesize_convex(2, 1, bounds, 0.995, with_perf=True)
        assert res.gamma is not None and np.isfinite(res.gamma)


class TestStructuredDesign:
    def test_linear_instance_fast_rate(self):
        # no uncertainty at L2 = m2: arbitrarily fast rates possible
        H1 = np.diag([1.0, 2.0, 10.0, 4.0])
        T = np.array([[2.0, -7.0, 0.0, 5.0],
                      [-1.0, 4.0, -3.0, 2.0],
                      [0.0, -2.0, 1.0, 0.0]])
        rho, res = certify_structured_rate(H1, T, 1.0, 1.0, n=2)
        assert rho <= 0.1
        ok = res.algo
        assert ok.n == 2 and ok.p == 4

    def test_plain_sector_reduction_roundtrip(self):
        # design for the plain class via H1 = m I, T = I, then re-certify
        rho, res = certify_structured_rate(
            BOUNDS10.m * np.eye(1), np.eye(1), 0.0, BOUNDS10.L - BOUNDS10.m, n=2)
        st = ZamesFalbStructure(1, 0, 1, "unstructured", 1.0)
        recert = certify_rate(res.algo, BOUNDS10, st)
        assert recert.value <= rho + 0.01


def test_h2_norm_linear_hand_value():
    # deadbeat loop: gramian = B B^T + A B B^T A^T
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.array([[-1.0], [0.0]])
    C = np.array([[1.0, 0.0]])
    assert h2_norm_linear(A, B, C) == pytest.approx(1.0)


def test_larger_multiplier_class_never_hurts_gamma():
    bounds = SectorBounds(1.0, 30.0)
    algo = make_named("nm", bounds)
    small = certify_h2(algo, bounds, ZamesFalbStructure(1, 0, 1)).value
    large = certify_h2(algo, bounds, ZamesFalbStructure(4, 0, 1)).value
    assert large <= small * (1 + 1e-6)


def test_h2_not_certifiable_for_heavy_ball():
    bounds = SectorBounds(1.0, 100.0)
    with pytest.raises(NotCertifiable):
        certify_h2(make_named("hb", bounds), bounds, ZamesFalbStructure(4, 0, 1))
