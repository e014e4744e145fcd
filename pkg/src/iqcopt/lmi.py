"""Assembly of every matrix-inequality system as an abstract SdpProblem.

All analysis inequalities share one KYP-style congruence

    [A B; I 0; C D]^T blkdiag(P, -P, M) [A B; I 0; C D]  <=  -eps I,

with the multiplier matrix M affine in the kernel parameters. Synthesis
variants reshuffle the same blocks by Schur complement so the algorithm
matrices appear linearly. Strict inequalities carry a relative margin
eps = 1e-7 (1 + ||const||_F); certificates are rechecked by eigenvalue
computation in the solver layer, so a reported certificate always holds
numerically.
"""

from dataclasses import dataclass, field

import numpy as np

from .algorithms import (AlgorithmRealization, SectorBounds, canonical_output,
                         chain_matrices, reduce_to_scalar_block,
                         StructuredControllerForm, from_structured)
from .errors import (DimensionError, DomainError, InfeasiblePrecondition,
                     PreconditionError, StructureError)
from .multipliers import (ZamesFalbParameters, ZamesFalbStructure,
                          m_delta_coefficients, membership_constraints,
                          psi_delta_realization)
from .plantbuild import (AugmentedPlant, PerformanceAugmentedPlant,
                         UncertainLoop, build_perf_plant_loop,
                         build_rate_plant_loop, sector_loop, structured_loop,
                         _psi_pieces)
from .problem import AffineMatrix, SdpProblem, blkdiag, congruence
from .sdp import SdpSolution
from .statespace import StateSpace

__all__ = [
    "SdpProblem", "RateCertificate", "H2Certificate", "SynthesisResult",
    "kyp_block", "assemble_rate", "assemble_rate_reduced", "assemble_h2",
    "assemble_convex_synth", "assemble_convex_synth_perf",
    "assemble_bmi_fixed_P", "assemble_bmi_fixed_AB",
    "assemble_structured_synth", "assemble_structured_rate",
    "assemble_structured_h2",
]


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateCertificate:
    P: np.ndarray = field(repr=False)
    zf: ZamesFalbParameters = field(repr=False)
    rho: float = 0.0
    structure: ZamesFalbStructure = None


@dataclass(frozen=True)
class H2Certificate:
    P_p: np.ndarray = field(repr=False)
    zf: ZamesFalbParameters = field(repr=False)
    gamma: float = 0.0
    Z: np.ndarray = field(repr=False, default=None)
    structure: ZamesFalbStructure = None


@dataclass(frozen=True)
class SynthesisResult:
    algo: AlgorithmRealization
    P22: np.ndarray = field(repr=False, default=None)
    QA: np.ndarray = field(repr=False, default=None)
    QB: np.ndarray = field(repr=False, default=None)
    rho: float = 0.0
    gamma: float | None = None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _smul(scalar: AffineMatrix, M: np.ndarray) -> AffineMatrix:
    """scalar (1x1 expression) times a constant matrix."""
    out = AffineMatrix(M.shape, scalar.const[0, 0] * M)
    for k, v in scalar.coeffs.items():
        out.coeffs[k] = v[0, 0] * M
    return out


def _add_multiplier(prob: SdpProblem, structure: ZamesFalbStructure,
                    name: str = "zf_theta"):
    """Kernel variables, their M_Delta expression, and membership rows."""
    nvar = structure.parameter_count()
    theta = prob.add_matrix(name, nvar, 1)
    entries = [theta.entry(k, 0) for k in range(nvar)]
    coeffs = m_delta_coefficients(structure)
    md = AffineMatrix(coeffs[0].shape)
    for e, E in zip(entries, coeffs):
        md = md + _smul(e, E)
    for con in membership_constraints(structure):
        expr = AffineMatrix((1, 1))
        for k, c in enumerate(con.coeffs):
            if c:
                expr = expr + c * entries[k]
        prob.add_linear(expr, con.sense, con.rhs, name=f"{name}:{con.label}")
    return theta, md


def _decode_zf(structure: ZamesFalbStructure, theta_value) -> ZamesFalbParameters:
    return ZamesFalbParameters(tuple(structure.matrices_from_theta(
        np.asarray(theta_value).ravel())))


def _kyp_outer(A, B, C, D) -> np.ndarray:
    n, m = A.shape[0], B.shape[1]
    return np.block([[A, B], [np.eye(n), np.zeros((n, m))], [C, D]])


def _spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0


def kyp_block(G: StateSpace, M, name: str = "kyp") -> SdpProblem:
    """Generic KYP feasibility problem for G(z)^* M G(z) < 0 on the circle.

    When M covers outputs and inputs jointly (shape ny+nu), the inequality
    is posed for the stacked transfer function [G; I] instead, which is
    the form every multiplier-weighted FDI in this package takes.
    """
    M = np.asarray(M, dtype=float)
    if G.nx and np.any(np.abs(np.abs(np.linalg.eigvals(G.A)) - 1.0) < 1e-9):
        raise PreconditionError("A has an eigenvalue on the unit circle")
    if M.shape[0] == G.ny + G.nu:
        C = np.vstack([G.C, np.zeros((G.nu, G.nx))])
        D = np.vstack([G.D, np.eye(G.nu)])
    elif M.shape[0] == G.ny:
        C, D = G.C, G.D
    else:
        raise DimensionError(f"M has size {M.shape[0]}, expected "
                             f"{G.ny} or {G.ny + G.nu}")
    prob = SdpProblem(name)
    P = prob.add_symmetric("P", G.nx)
    out = _kyp_outer(G.A, G.B, C, D)
    mid = blkdiag(P, -P, AffineMatrix.constant(M))
    prob.add_lmi(congruence(out, mid), "neg", name=name)
    return prob


def _add_kyp_constraint(prob, plant_out, P, md, name):
    mid = blkdiag(P, -P, md)
    return prob.add_lmi(congruence(plant_out, mid), "neg", name=name)


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------

@dataclass
class RateAssembly:
    problem: SdpProblem
    plant: AugmentedPlant
    structure: ZamesFalbStructure

    def decode(self, sol: SdpSolution) -> RateCertificate:
        P = np.asarray(sol.values["P"])
        theta = np.asarray(sol.values["zf_theta"]).ravel()
        tr = float(np.trace(P))
        if tr > 0:  # remove the scale invariance of the homogeneous LMI
            tau = self.plant.n_c / tr
            P = tau * P
            theta = tau * theta
        return RateCertificate(P=P, zf=_decode_zf(self.structure, theta),
                               rho=self.plant.rho, structure=self.structure)


def assemble_rate(plant: AugmentedPlant, structure: ZamesFalbStructure = None,
                  rho: float = None) -> RateAssembly:
    """Feasibility SDP certifying robust exponential rate rho for the plant."""
    structure = structure or plant.structure
    rho = plant.rho if rho is None else rho
    if abs(rho - plant.rho) > 1e-12:
        raise DimensionError("plant was built for a different rho")
    if abs(structure.rho - rho) > 1e-12:
        structure = structure.with_rho(rho)
    Anom = plant.Ac[plant.n_mult:, plant.n_mult:] * rho
    if _spectral_radius(Anom) >= rho:
        raise InfeasiblePrecondition(
            f"nominal spectral radius {_spectral_radius(Anom):.6f} >= rho={rho}")
    prob = SdpProblem(f"rate[rho={rho:.6g}]")
    P = prob.add_symmetric("P", plant.n_c)
    theta, md = _add_multiplier(prob, structure)
    out = _kyp_outer(plant.Ac, plant.Bc, plant.Cc, plant.Dc)
    _add_kyp_constraint(prob, out, P, md, "rate")
    return RateAssembly(prob, plant, structure)


def assemble_rate_for(algo: AlgorithmRealization, bounds: SectorBounds,
                      structure: ZamesFalbStructure, rho: float) -> RateAssembly:
    from .plantbuild import build_rate_plant

    plant = build_rate_plant(algo, bounds, structure.with_rho(rho), rho)
    return assemble_rate(plant)


def assemble_rate_reduced(algo: AlgorithmRealization, bounds: SectorBounds,
                          structure: ZamesFalbStructure, rho: float) -> RateAssembly:
    """Rate LMI on the p=1 Kronecker core; feasibility-equivalent and smaller."""
    if structure.klass != "unstructured":
        raise StructureError("the reduced LMI applies to the unstructured class")
    core = reduce_to_scalar_block(algo)  # raises StructureError if not Kronecker
    red = ZamesFalbStructure(structure.ell_causal, structure.ell_anticausal, 1,
                             "unstructured", rho)
    return assemble_rate_for(core, bounds, red, rho)


@dataclass
class H2Assembly:
    problem: SdpProblem
    plant: PerformanceAugmentedPlant
    structure: ZamesFalbStructure

    def decode(self, sol: SdpSolution) -> H2Certificate:
        t = float(sol.values["t"])
        return H2Certificate(
            P_p=np.asarray(sol.values["P_p"]),
            zf=_decode_zf(self.structure, np.asarray(sol.values["zf_theta"]).ravel()),
            gamma=float(np.sqrt(max(t, 0.0))),
            Z=np.asarray(sol.values["Z"]),
            structure=self.structure,
        )


def assemble_h2(perf_plant: PerformanceAugmentedPlant,
                structure: ZamesFalbStructure = None) -> H2Assembly:
    """Minimization SDP for the asymptotic noise-amplification level gamma."""
    structure = (structure or perf_plant.structure).with_rho(1.0)
    Anom = perf_plant.boldA[perf_plant.n_mult:, perf_plant.n_mult:]
    if _spectral_radius(Anom) >= 1.0:
        raise InfeasiblePrecondition("nominal loop is not Schur stable")
    pl = perf_plant
    prob = SdpProblem("h2")
    P = prob.add_symmetric("P_p", pl.n_c)
    theta, md = _add_multiplier(prob, structure)
    Z = prob.add_symmetric("Z", pl.n_wp)
    t = prob.add_scalar("t")

    out = np.block([
        [pl.boldA, pl.boldB1],
        [np.eye(pl.n_c), np.zeros((pl.n_c, pl.p_c))],
        [pl.boldC1, pl.boldD11],
        [pl.boldC2, np.zeros((pl.n_yp, pl.p_c))],
    ])
    mid = blkdiag(P, -P, md, AffineMatrix.constant(np.eye(pl.n_yp)))
    prob.add_lmi(congruence(out, mid), "neg", name="h2-kyp")

    NPN = congruence(pl.N, P)                      # N^T P N
    NB2 = pl.N.T @ pl.boldB2
    schur = AffineMatrix.block([[NPN, NPN @ NB2],
                                [(NPN @ NB2).T, Z]])
    prob.add_lmi(schur, "pos", name="h2-trace-schur")
    prob.add_lmi(P, "pos", name="h2-Pp-pos")
    prob.add_linear(Z.trace() - t, "<=", 0.0, name="trZ<=t")
    prob.minimize(t)
    return H2Assembly(prob, pl, structure)


def assemble_h2_for(algo: AlgorithmRealization, bounds: SectorBounds,
                    structure: ZamesFalbStructure, channel=None) -> H2Assembly:
    from .plantbuild import build_perf_plant, default_noise_channel

    channel = channel or default_noise_channel(algo)
    plant = build_perf_plant(algo, bounds, structure.with_rho(1.0), channel)
    return assemble_h2(plant)


# ---------------------------------------------------------------------------
# convex synthesis
# ---------------------------------------------------------------------------

def _synth_constants(n: int, p: int, bounds: SectorBounds,
                     structure: ZamesFalbStructure, rho: float):
    """Constant plant pieces for synthesis with canonical C, D, Ddagger."""
    C, D, Dd = canonical_output(n, p)
    psi, _ = _psi_pieces(structure, bounds.L - bounds.m)
    nd = psi.nx
    N = n * p
    nc = nd + N
    Cext = np.vstack([C, np.zeros((p, N))])
    Din = np.vstack([np.zeros((p, p)), np.eye(p)])
    # rows of [Ac(rho) Bc] belonging to the multiplier states (constant)
    top = np.hstack([psi.A, psi.B @ Cext / rho, psi.B @ Din])
    CcDc = np.hstack([psi.C, psi.D @ Cext / rho, psi.D @ Din])
    return C, D, Dd, nd, N, nc, top, CcDc


def _embed_state_block(expr: AffineMatrix, nc: int, p: int) -> AffineMatrix:
    """Pad an nc x nc expression with p zero rows/cols (the input block)."""
    E = np.vstack([np.eye(nc), np.zeros((p, nc))])
    return congruence(E.T, expr)


@dataclass
class ConvexSynthAssembly:
    problem: SdpProblem
    n: int
    p: int
    bounds: SectorBounds
    structure: ZamesFalbStructure
    rho: float
    with_perf: bool = False

    def decode(self, sol: SdpSolution) -> SynthesisResult:
        P22 = np.asarray(sol.values["P22"])
        QA = np.asarray(sol.values["QA"])
        QB = np.asarray(sol.values["QB"])
        A = np.linalg.solve(P22, QA)
        B = np.linalg.solve(P22, QB)
        C, D, Dd = canonical_output(self.n, self.p)
        # the linear equality (QA - P22) Ddagger = 0 holds to solver
        # tolerance only; enforce the fixed-point property exactly
        A[:, :self.p] = Dd
        algo = AlgorithmRealization(A, B, C, D, Dd, n=self.n, p=self.p)
        gamma = None
        if self.with_perf and "t" in sol.values:
            gamma = float(np.sqrt(max(float(sol.values["t"]), 0.0)))
        return SynthesisResult(algo=algo, P22=P22, QA=QA, QB=QB,
                               rho=self.rho, gamma=gamma)


def assemble_convex_synth(n: int, p: int, bounds: SectorBounds,
                          structure: ZamesFalbStructure, rho: float,
                          _prob: SdpProblem = None) -> ConvexSynthAssembly:
    """Convex rate synthesis with block-diagonal P (conservative)."""
    if not (0 < rho < 1):
        raise DomainError("synthesis requires rho in (0, 1)")
    structure = ZamesFalbStructure(structure.ell_causal, structure.ell_anticausal,
                                   p, structure.klass, rho)
    C, D, Dd, nd, N, nc, top, CcDc = _synth_constants(n, p, bounds, structure, rho)
    prob = _prob or SdpProblem(f"synth[rho={rho:.6g}]")
    P22 = prob.add_symmetric("P22", N)
    P11 = prob.add_symmetric("P11", nd) if nd else AffineMatrix((0, 0))
    QA = prob.add_matrix("QA", N, N)
    QB = prob.add_matrix("QB", N, p)
    theta, md = _add_multiplier(prob, structure)

    # U(P, M_Delta) with P = blkdiag(P11, P22): the A,B-dependent rows of
    # [Ac Bc] are annihilated by P - N P22 N^T = blkdiag(P11, 0).
    U = congruence(top, P11) if nd else AffineMatrix((nc + p, nc + p))
    P_full = blkdiag(P11, P22) if nd else P22
    U = U - _embed_state_block(P_full, nc, p)
    U = U + congruence(CcDc, md)

    TR = AffineMatrix.block([[np.zeros((N, nd)),
                              (1.0 / rho) * (QA + bounds.m * (QB @ C)),
                              QB]])
    big = AffineMatrix.block([[-P22, TR], [TR.T, U]])
    prob.add_lmi(big, "neg", name="synth-rate")
    prob.add_matrix_equality((QA - P22) @ Dd, name="eq-fixedpoint")
    return ConvexSynthAssembly(prob, n, p, bounds, structure, rho)


def assemble_convex_synth_perf(n: int, p: int, bounds: SectorBounds,
                               structure: ZamesFalbStructure,
                               rho: float) -> ConvexSynthAssembly:
    """Joint rate + H2 convex synthesis; channel fixed to B_perf=B, C_perf=C."""
    asm = assemble_convex_synth(n, p, bounds, structure, rho)
    prob = asm.problem
    structure = asm.structure
    C, D, Dd, nd, N, nc, _, _ = _synth_constants(n, p, bounds, structure, rho)
    # performance plant pieces live at rho = 1
    _, _, _, _, _, _, top1, CcDc1 = _synth_constants(n, p, bounds, structure, 1.0)
    P22 = prob.variable_expr("P22")
    QA = prob.variable_expr("QA")
    QB = prob.variable_expr("QB")
    Pp11 = prob.add_symmetric("Pp11", nd) if nd else AffineMatrix((0, 0))
    theta_p, md_p = _add_multiplier(prob, structure.with_rho(1.0), name="zf_theta_p")
    Z = prob.add_symmetric("Z", p)
    t = prob.add_scalar("t")

    Up = congruence(top1, Pp11) if nd else AffineMatrix((nc + p, nc + p))
    Pp_full = blkdiag(Pp11, P22) if nd else P22
    Up = Up - _embed_state_block(Pp_full, nc, p)
    Up = Up + congruence(CcDc1, md_p)
    # performance rows: C_perf = C on the algorithm states, zero elsewhere
    C2 = np.hstack([np.zeros((p, nd)), C, np.zeros((p, p))])
    Up = Up + AffineMatrix.constant(C2.T @ C2)

    TRp = AffineMatrix.block([[np.zeros((N, nd)), QA + bounds.m * (QB @ C), QB]])
    big = AffineMatrix.block([[-P22, TRp], [TRp.T, Up]])
    prob.add_lmi(big, "neg", name="synth-h2")
    trace_blk = AffineMatrix.block([[P22, QB], [QB.T, Z]])
    prob.add_lmi(trace_blk, "pos", name="synth-h2-trace")
    prob.add_linear(Z.trace() - t, "<=", 0.0, name="trZ<=t")
    prob.minimize(t)
    asm.with_perf = True
    return asm


# ---------------------------------------------------------------------------
# BMI alternation half-steps
# ---------------------------------------------------------------------------

@dataclass
class BmiFixedPAssembly:
    problem: SdpProblem
    n: int
    p: int
    bounds: SectorBounds
    structure: ZamesFalbStructure
    rho: float
    with_perf: bool
    slack: bool

    def decode(self, sol: SdpSolution) -> SynthesisResult:
        A = np.asarray(sol.values["A"]).copy()
        B = np.asarray(sol.values["B"])
        C, D, Dd = canonical_output(self.n, self.p)
        # project the fixed-point equality exactly: it is affine and the
        # solver satisfies it only to its own tolerance
        A[:, :self.p] = Dd
        algo = AlgorithmRealization(A, B, C, D, Dd, n=self.n, p=self.p)
        gamma = None
        if self.with_perf and "t" in sol.values:
            gamma = float(np.sqrt(max(float(sol.values["t"]), 0.0)))
        return SynthesisResult(algo=algo, rho=self.rho, gamma=gamma)


def assemble_bmi_fixed_P(n: int, p: int, bounds: SectorBounds,
                         structure: ZamesFalbStructure, rho: float,
                         P: np.ndarray, P_p: np.ndarray = None,
                         slack: bool = False) -> BmiFixedPAssembly:
    """Fixed-certificate half-step: linear in (A, B, multipliers).

    With ``slack`` the rate block is relaxed to <= s I and s is minimized
    (used to walk the target rate down); otherwise the rate block is a
    hard constraint and, when P_p is given, the H2 objective t = gamma^2
    is minimized subject to the performance blocks.
    """
    structure = ZamesFalbStructure(structure.ell_causal, structure.ell_anticausal,
                                   p, structure.klass, rho)
    C, D, Dd, nd, N, nc, top, CcDc = _synth_constants(n, p, bounds, structure, rho)
    P = np.asarray(P, dtype=float)
    if P.shape != (nc, nc):
        raise DimensionError(f"P must be {nc}x{nc}")
    P22c = P[nd:, nd:]
    if np.min(np.linalg.eigvalsh(0.5 * (P22c + P22c.T))) <= 0:
        raise PreconditionError("P22 must be positive definite when fixing P")
    with_perf = P_p is not None
    prob = SdpProblem(f"bmi-fixedP[rho={rho:.6g}]")
    Ae = prob.add_matrix("A", N, N)
    Be = prob.add_matrix("B", N, p)
    theta, md = _add_multiplier(prob, structure)

    def bottom_rows(rho_):
        """[0  rho^-1 (A + m B C)  B] as an affine N x (nc+p) expression."""
        return AffineMatrix.block([[np.zeros((N, nd)),
                                    (1.0 / rho_) * (Ae + bounds.m * (Be @ C)),
                                    Be]])

    def rate_block(P_, rho_, md_, top_, CcDc_, extra_const=None):
        nd_ = nd
        P11c = P_[:nd_, :nd_]
        P12c = P_[:nd_, nd_:]
        P22_ = P_[nd_:, nd_:]
        bot = bottom_rows(rho_)
        U = AffineMatrix.constant(top_.T @ P11c @ top_)
        cross = (bot.__rmatmul__(P12c)).__rmatmul__(top_.T)  # top^T P12 bot
        U = U + cross + cross.T
        U = U - _embed_state_block(AffineMatrix.constant(P_), nc, p)
        U = U + congruence(CcDc_, md_)
        if extra_const is not None:
            U = U + AffineMatrix.constant(extra_const)
        TR = P22_ @ bot
        return AffineMatrix.block([[AffineMatrix.constant(-P22_), TR],
                                   [TR.T, U]])

    big = rate_block(P, rho, md, top, CcDc)
    if slack:
        s = prob.add_scalar("s")
        dim = big.shape[0]
        prob.add_lmi(big - _smul(s, np.eye(dim)), "neg", eps=0.0, name="bmi-rate-slack")
        s_max = 10.0 * (1.0 + float(np.max(np.abs(P))))
        prob.add_linear(s, ">=", -s_max)
        prob.add_linear(s, "<=", s_max)
        # keep candidate algorithms well-scaled for the next half-step
        for i in range(N):
            for j in range(N):
                prob.add_linear(Ae.entry(i, j), "<=", 10.0)
                prob.add_linear(Ae.entry(i, j), ">=", -10.0)
            for j in range(p):
                prob.add_linear(Be.entry(i, j), "<=", 10.0)
                prob.add_linear(Be.entry(i, j), ">=", -10.0)
        prob.minimize(s)
    else:
        # absolute margin: the block constant carries P, so the default
        # relative eps would exceed the warm start's analysis margin
        prob.add_lmi(big, "neg", eps=1e-9, name="bmi-rate")

    if with_perf:
        P_p = np.asarray(P_p, dtype=float)
        Pp22c = P_p[nd:, nd:]
        if np.min(np.linalg.eigvalsh(0.5 * (Pp22c + Pp22c.T))) <= 0:
            raise PreconditionError("P_p22 must be positive definite when fixing P_p")
        theta_p, md_p = _add_multiplier(prob, structure.with_rho(1.0),
                                        name="zf_theta_p")
        _, _, _, _, _, _, top1, CcDc1 = _synth_constants(n, p, bounds, structure, 1.0)
        C2 = np.hstack([np.zeros((p, nd)), C, np.zeros((p, p))])
        bigp = rate_block(P_p, 1.0, md_p, top1, CcDc1, extra_const=C2.T @ C2)
        prob.add_lmi(bigp, "neg", eps=1e-9, name="bmi-h2")
        Z = prob.add_symmetric("Z", p)
        t = prob.add_scalar("t")
        trace_blk = AffineMatrix.block([
            [AffineMatrix.constant(Pp22c), Pp22c @ Be],
            [(Pp22c @ Be).T, Z]])
        prob.add_lmi(trace_blk, "pos", eps=1e-9, name="bmi-h2-trace")
        prob.add_linear(Z.trace() - t, "<=", 0.0)
        if not slack:
            prob.minimize(t)

    # fixed-point condition (A - I) Ddagger = 0 with canonical Ddagger
    prob.add_matrix_equality(Ae @ Dd - AffineMatrix.constant(Dd), name="eq-fixedpoint")
    return BmiFixedPAssembly(prob, n, p, bounds, structure, rho, with_perf, slack)


def assemble_bmi_fixed_AB(algo: AlgorithmRealization, bounds: SectorBounds,
                          structure: ZamesFalbStructure, rho: float) -> RateAssembly:
    """Fixed-algorithm half-step: exactly the rate analysis LMI."""
    return assemble_rate_for(algo, bounds, structure, rho)


@dataclass
class RateSlackAssembly:
    problem: SdpProblem
    plant: AugmentedPlant
    structure: ZamesFalbStructure

    def decode_P(self, sol: SdpSolution) -> np.ndarray:
        return np.asarray(sol.values["P"])


def assemble_rate_slack(algo: AlgorithmRealization, bounds: SectorBounds,
                        structure: ZamesFalbStructure, rho: float,
                        radius: float = 1e6) -> RateSlackAssembly:
    """Slack-minimization variant of the rate LMI for alternation.

    minimize s subject to the KYP block <= s I, with the scale pinned by
    P22 >= I (any certificate can be scaled up to satisfy it, so s* < 0
    iff the rate LMI is strictly feasible within the box radius). The
    optimal s measures how far the fixed algorithm is from certifiable.
    """
    from .plantbuild import build_rate_plant

    plant = build_rate_plant(algo, bounds, structure.with_rho(rho), rho)
    prob = SdpProblem(f"rate-slack[rho={rho:.6g}]")
    P = prob.add_symmetric("P", plant.n_c)
    theta, md = _add_multiplier(prob, structure.with_rho(rho))
    s = prob.add_scalar("s")
    out = _kyp_outer(plant.Ac, plant.Bc, plant.Cc, plant.Dc)
    big = congruence(out, blkdiag(P, -P, md))
    dim = big.shape[0]
    prob.add_lmi(big - _smul(s, np.eye(dim)), "neg", eps=0.0, name="rate-slack")
    nd = plant.n_mult
    sel = np.vstack([np.zeros((nd, plant.n_loop)), np.eye(plant.n_loop)])
    P22 = congruence(sel, P)
    prob.add_lmi(P22 - AffineMatrix.constant(np.eye(plant.n_loop)), "pos",
                 eps=0.0, name="p22-normalized")
    prob.add_lmi(AffineMatrix.constant(radius * np.eye(plant.n_c)) - P, "pos",
                 eps=0.0, name="p-box-hi")
    prob.add_lmi(P + AffineMatrix.constant(radius * np.eye(plant.n_c)), "pos",
                 eps=0.0, name="p-box-lo")
    prob.add_linear(s, ">=", -radius)
    prob.add_linear(s, "<=", radius)
    prob.minimize(s)
    return RateSlackAssembly(prob, plant, structure.with_rho(rho))


# ---------------------------------------------------------------------------
# structured (parametrized-objective) design and analysis
# ---------------------------------------------------------------------------

@dataclass
class StructuredSynthAssembly:
    problem: SdpProblem
    n: int
    p: int
    rho: float

    def decode(self, sol: SdpSolution) -> SynthesisResult:
        Q = np.asarray(sol.values["Q"])
        M = np.asarray(sol.values["M"])
        K = M @ np.linalg.inv(Q)
        gains = tuple(K[:, i * self.p:(i + 1) * self.p] for i in range(self.n))
        algo = from_structured(StructuredControllerForm(gains))
        return SynthesisResult(algo=algo, rho=self.rho)


def assemble_structured_synth(H1, T, m2: float, L2: float, n: int,
                              rho: float) -> StructuredSynthAssembly:
    """State-feedback design LMI for gradients H1 z + T^T grad2(T z).

    grad2 is slope-restricted in [m2, L2]; the uncertain part is centered
    at beta = (L2+m2)/2 and handled by an S-procedure with a quadratic
    Lyapunov function. Recovery: K = M Q^{-1}.
    """
    H1 = np.atleast_2d(np.asarray(H1, dtype=float))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    p = H1.shape[0]
    q = T.shape[0]
    if H1.shape != (p, p) or T.shape[1] != p:
        raise DimensionError("H1 must be p x p, T must be q x p")
    if not (0 <= m2 <= L2):
        raise DomainError("need 0 <= m2 <= L2")
    if not (0 < rho < 1):
        raise DomainError("rho must lie in (0, 1)")
    N = n * p
    A1, B1 = chain_matrices(n, p)
    C, _, _ = canonical_output(n, p)
    # transformed chain: first block holds grad(C x); its own row is identity
    A2 = np.eye(N) + A1
    if n > 1:
        A2[:p, p:2 * p] = 0.0
    B2 = np.zeros((N, p))
    B2[:p, :] = np.eye(p)
    beta = 0.5 * (L2 + m2)
    TT = T.T @ T
    Abar = A2 + B2 @ H1 @ (C @ A1) + beta * B2 @ TT @ (C @ A1)
    CB1 = C @ B1
    Bbar = (B1 if n > 1 else np.zeros_like(B1)) \
        + B2 @ H1 @ CB1 + beta * B2 @ TT @ CB1
    Gbar = B2 @ T.T
    GammaA = T @ (C @ A1)   # Gamma = T C (A1 + B1 K); K-part enters via M
    GammaB = T @ CB1

    prob = SdpProblem(f"structured-synth[rho={rho:.6g}]")
    Q = prob.add_symmetric("Q", N)
    M = prob.add_matrix("M", p, N)
    closed = Abar @ Q + Bbar @ M
    if L2 - m2 < 1e-14:
        # no uncertainty left: w vanishes identically and the sector rows
        # are vacuous, so only the Lyapunov decay condition remains
        blk = AffineMatrix.block([[Q, closed], [closed.T, rho ** 2 * Q]])
    else:
        gamma_row = GammaA @ Q + GammaB @ M
        blk = AffineMatrix.block([
            [Q, np.zeros((N, q)), closed, AffineMatrix.constant(0.5 * (L2 - m2) * Gbar)],
            [np.zeros((q, N)), np.eye(q), gamma_row, np.zeros((q, q))],
            [closed.T, gamma_row.T, rho ** 2 * Q, np.zeros((N, q))],
            [AffineMatrix.constant(0.5 * (L2 - m2) * Gbar.T), np.zeros((q, q)), np.zeros((q, N)), np.eye(q)],
        ])
    prob.add_lmi(blk, "pos", name="structured")
    return StructuredSynthAssembly(prob, n, p, rho)


def assemble_structured_rate(algo: AlgorithmRealization, H1, T, m2: float,
                             L2: float, structure: ZamesFalbStructure,
                             rho: float) -> RateAssembly:
    """Rate analysis after the structured substitutions.

    With T = I and H1 = m I, m2 = 0, L2 = L - m this is matrix-identical
    to the plain sector analysis.
    """
    loop = structured_loop(algo, H1, T, m2, L2)
    if _spectral_radius(loop.Anom) >= rho:
        raise InfeasiblePrecondition("structured nominal loop too slow for rho")
    q = loop.channel_dim
    st = ZamesFalbStructure(structure.ell_causal, structure.ell_anticausal, q,
                            structure.klass, rho)
    plant = build_rate_plant_loop(loop, st, rho)
    return assemble_rate(plant)


def assemble_structured_h2(algo: AlgorithmRealization, H1, T, m2: float,
                           L2: float, structure: ZamesFalbStructure,
                           channel=None) -> H2Assembly:
    from .plantbuild import default_noise_channel

    loop = structured_loop(algo, H1, T, m2, L2)
    channel = channel or default_noise_channel(algo)
    q = loop.channel_dim
    st = ZamesFalbStructure(structure.ell_causal, structure.ell_anticausal, q,
                            structure.klass, 1.0)
    plant = build_perf_plant_loop(loop, st, channel[0], channel[1])
    return assemble_h2(plant)
