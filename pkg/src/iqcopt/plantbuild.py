"""Augmented-plant assembly for the analysis and performance LMIs.

The rate plant realizes psi_Delta [G_tilde; I] where G_tilde(z) = G(rho z)
is the rho-scaled loop transfer function; the performance plant is the
same object at rho = 1 extended by a noise channel (B_perf, C_perf, 0).
State ordering is fixed as (causal basis, anticausal basis, algorithm
states) so certificates are reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from .algorithms import AlgorithmRealization, SectorBounds, check_equilibrium_conditions
from .errors import DimensionError, DomainError, PreconditionError, UnsupportedError
from .multipliers import ZamesFalbStructure, psi_delta_realization, sector_transform
from .statespace import StateSpace


@dataclass(frozen=True)
class UncertainLoop:
    """Closed nominal loop with the uncertainty channel pulled out.

    For the plain sector setup: Anom = A + m B C, Beff = B, Ceff = C and
    width = L - m. Structured variants substitute their own matrices.
    """

    Anom: np.ndarray
    Beff: np.ndarray
    Ceff: np.ndarray
    width: float

    def __post_init__(self):
        Anom = np.atleast_2d(np.asarray(self.Anom, dtype=float))
        Beff = np.atleast_2d(np.asarray(self.Beff, dtype=float))
        Ceff = np.atleast_2d(np.asarray(self.Ceff, dtype=float))
        N = Anom.shape[0]
        if Anom.shape != (N, N) or Beff.shape[0] != N or Ceff.shape[1] != N:
            raise DimensionError("inconsistent loop dimensions")
        if Beff.shape[1] != Ceff.shape[0]:
            raise DimensionError("uncertainty channel must be square")
        if self.width < 0:
            raise DomainError("sector width must be nonnegative")
        object.__setattr__(self, "Anom", Anom)
        object.__setattr__(self, "Beff", Beff)
        object.__setattr__(self, "Ceff", Ceff)

    @property
    def nstates(self) -> int:
        return self.Anom.shape[0]

    @property
    def channel_dim(self) -> int:
        return self.Beff.shape[1]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.Anom))))


def sector_loop(algo: AlgorithmRealization, bounds: SectorBounds) -> UncertainLoop:
    return UncertainLoop(algo.nominal_matrix(bounds.m), algo.B, algo.C,
                         bounds.L - bounds.m)


def structured_loop(algo: AlgorithmRealization, H1, T, m2: float, L2: float) -> UncertainLoop:
    """Loop after the parametrized-gradient substitutions.

    The gradient splits as H1 z + T^T grad2(T z) with grad2 slope-bounded
    in [m2, L2]; the uncertainty channel becomes (B T^T, T C) with width
    L2 - m2.
    """
    H1 = np.atleast_2d(np.asarray(H1, dtype=float))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if H1.shape != (algo.p, algo.p) or T.shape[1] != algo.p:
        raise DimensionError("H1 must be p x p and T must have p columns")
    if not (0 <= m2 <= L2):
        raise DomainError("need 0 <= m2 <= L2")
    Anom = algo.A + algo.B @ H1 @ algo.C + m2 * algo.B @ T.T @ T @ algo.C
    return UncertainLoop(Anom, algo.B @ T.T, T @ algo.C, L2 - m2)


@dataclass(frozen=True)
class AugmentedPlant:
    """Realization (Ac(rho), Bc, Cc(rho), Dc) of psi_Delta [G_tilde; I]."""

    Ac: np.ndarray = field(repr=False)
    Bc: np.ndarray = field(repr=False)
    Cc: np.ndarray = field(repr=False)
    Dc: np.ndarray = field(repr=False)
    n_mult: int
    n_loop: int
    p_c: int
    q_c: int
    rho: float
    structure: ZamesFalbStructure = None

    @property
    def n_c(self) -> int:
        return self.n_mult + self.n_loop

    def as_statespace(self) -> StateSpace:
        return StateSpace(self.Ac, self.Bc, self.Cc, self.Dc)


def _psi_pieces(structure: ZamesFalbStructure, width: float):
    """psi_Delta realization for a given sector width."""
    # reuse the bounds-based builder through a synthetic (m, L) pair
    bounds = SectorBounds(1.0, 1.0 + width)
    psi = psi_delta_realization(structure, bounds)
    W = sector_transform(bounds, structure.p)
    return psi, W


def build_rate_plant_loop(loop: UncertainLoop, structure: ZamesFalbStructure,
                          rho: float) -> AugmentedPlant:
    """Block assembly of the augmented plant for an explicit uncertain loop."""
    if not (0 < rho <= 1):
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    q = loop.channel_dim
    if structure.p != q:
        raise DimensionError(
            f"multiplier dimension p={structure.p} must match channel dim {q}"
        )
    psi, _ = _psi_pieces(structure, loop.width)
    N = loop.nstates
    nd = psi.nx
    Cext = np.vstack([loop.Ceff, np.zeros((q, N))])      # [C; 0]
    Din = np.vstack([np.zeros((q, q)), np.eye(q)])       # [0; I]
    Ac = np.block([
        [psi.A, psi.B @ Cext / rho],
        [np.zeros((N, nd)), loop.Anom / rho],
    ])
    Bc = np.vstack([psi.B @ Din, loop.Beff])
    Cc = np.hstack([psi.C, psi.D @ Cext / rho])
    Dc = psi.D @ Din
    return AugmentedPlant(Ac, Bc, Cc, Dc, n_mult=nd, n_loop=N, p_c=q,
                          q_c=psi.ny, rho=rho, structure=structure)


def build_rate_plant(algo: AlgorithmRealization, bounds: SectorBounds,
                     structure: ZamesFalbStructure, rho: float) -> AugmentedPlant:
    ok, _ = check_equilibrium_conditions(algo.A, algo.B, algo.C, algo.D, algo.Ddagger)
    if not ok:
        raise PreconditionError("algorithm violates the equilibrium conditions")
    if structure.p != algo.p:
        raise DimensionError("structure.p must equal the algorithm dimension p")
    return build_rate_plant_loop(sector_loop(algo, bounds), structure, rho)


@dataclass(frozen=True)
class PerformanceAugmentedPlant:
    """Realization of the performance-augmented filter stack at rho = 1.

    Outputs split into the multiplier rows (q_c) and the performance rows
    (n_yp); inputs into the uncertainty channel (p_c) and the noise
    channel (n_wp). The direct terms D12, D21, D22 vanish for the H2
    setup with D_perf = 0.
    """

    boldA: np.ndarray = field(repr=False)
    boldB1: np.ndarray = field(repr=False)
    boldB2: np.ndarray = field(repr=False)
    boldC1: np.ndarray = field(repr=False)
    boldC2: np.ndarray = field(repr=False)
    boldD11: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    n_mult: int
    n_loop: int
    p_c: int
    q_c: int
    n_wp: int
    n_yp: int
    structure: ZamesFalbStructure = None

    @property
    def n_c(self) -> int:
        return self.n_mult + self.n_loop


def build_perf_plant_loop(loop: UncertainLoop, structure: ZamesFalbStructure,
                          B_perf, C_perf) -> PerformanceAugmentedPlant:
    q = loop.channel_dim
    if structure.p != q:
        raise DimensionError("multiplier dimension must match channel dim")
    B_perf = np.atleast_2d(np.asarray(B_perf, dtype=float))
    C_perf = np.atleast_2d(np.asarray(C_perf, dtype=float))
    N = loop.nstates
    if B_perf.shape[0] != N or C_perf.shape[1] != N:
        raise DimensionError("performance channel dimensions do not match the loop")
    nwp, nyp = B_perf.shape[1], C_perf.shape[0]
    psi, _ = _psi_pieces(structure, loop.width)
    nd = psi.nx
    Cext = np.vstack([loop.Ceff, np.zeros((q, N))])
    Din = np.vstack([np.zeros((q, q)), np.eye(q)])
    boldA = np.block([
        [psi.A, psi.B @ Cext],
        [np.zeros((N, nd)), loop.Anom],
    ])
    boldB1 = np.vstack([psi.B @ Din, loop.Beff])
    boldB2 = np.vstack([np.zeros((nd, nwp)), B_perf])
    boldC1 = np.hstack([psi.C, psi.D @ Cext])
    boldC2 = np.hstack([np.zeros((nyp, nd)), C_perf])
    boldD11 = psi.D @ Din
    Nsel = np.vstack([np.zeros((nd, N)), np.eye(N)])
    return PerformanceAugmentedPlant(
        boldA, boldB1, boldB2, boldC1, boldC2, boldD11, Nsel,
        n_mult=nd, n_loop=N, p_c=q, q_c=psi.ny, n_wp=nwp, n_yp=nyp,
        structure=structure,
    )


def build_perf_plant(algo: AlgorithmRealization, bounds: SectorBounds,
                     structure: ZamesFalbStructure, perf) -> PerformanceAugmentedPlant:
    """perf is a triple (B_perf, C_perf, D_perf); D_perf must be zero."""
    B_perf, C_perf, D_perf = perf
    if D_perf is not None and np.any(np.abs(np.asarray(D_perf, dtype=float)) > 0):
        raise UnsupportedError("only D_perf = 0 is supported for the H2 setup")
    ok, _ = check_equilibrium_conditions(algo.A, algo.B, algo.C, algo.D, algo.Ddagger)
    if not ok:
        raise PreconditionError("algorithm violates the equilibrium conditions")
    if structure.p != algo.p:
        raise DimensionError("structure.p must equal the algorithm dimension p")
    return build_perf_plant_loop(sector_loop(algo, bounds), structure, B_perf, C_perf)


def default_noise_channel(algo: AlgorithmRealization):
    """Additive gradient-noise channel: B_perf = B, C_perf = D, D_perf = 0."""
    return algo.B.copy(), algo.D.copy(), np.zeros((algo.p, algo.p))
