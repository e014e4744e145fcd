"""Minimal discrete-time state-space algebra.

Everything here operates on plain dense numpy arrays; systems are small
(tens of states), so no sparsity or balancing is attempted.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, SingularityError


def _as_matrix(M, rows=None, cols=None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if rows is not None and A.shape == (0,) * A.ndim:
        A = A.reshape(rows, cols)
    return A


@dataclass(frozen=True)
class StateSpace:
    """Realization (A, B, C, D) of G(z) = C (zI - A)^{-1} B + D.

    nx = 0 denotes a static gain. Instances are immutable and safe to
    share across threads.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A)
        D = _as_matrix(self.D)
        nx = A.shape[0]
        ny, nu = D.shape
        B = np.asarray(self.B, dtype=float).reshape(nx, nu)
        C = np.asarray(self.C, dtype=float).reshape(ny, nx)
        if A.shape != (nx, nx):
            raise DimensionError(f"A must be square, got {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.D.shape[1]

    @property
    def ny(self) -> int:
        return self.D.shape[0]

    @staticmethod
    def static_gain(D) -> "StateSpace":
        D = _as_matrix(D)
        ny, nu = D.shape
        return StateSpace(np.zeros((0, 0)), np.zeros((0, nu)), np.zeros((ny, 0)), D)

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.nx else np.zeros(0, dtype=complex)


def series(first: StateSpace, second: StateSpace) -> StateSpace:
    """Series interconnection: output of `first` feeds `second`.

    The returned realization has transfer function second(z) @ first(z)
    and stacks the second system's states first.
    """
    if first.ny != second.nu:
        raise DimensionError(
            f"series: first.ny={first.ny} does not match second.nu={second.nu}"
        )
    A1, B1, C1, D1 = first.A, first.B, first.C, first.D
    A2, B2, C2, D2 = second.A, second.B, second.C, second.D
    n1, n2 = first.nx, second.nx
    A = np.block([[A2, B2 @ C1], [np.zeros((n1, n2)), A1]])
    B = np.vstack([B2 @ D1, B1])
    C = np.hstack([C2, D2 @ C1])
    D = D2 @ D1
    return StateSpace(A, B, C, D)


def rho_scale(sys: StateSpace, rho: float) -> StateSpace:
    """Frequency substitution z -> rho*z: result(z) == sys(rho*z)."""
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    return StateSpace(sys.A / rho, sys.B / rho, sys.C, sys.D)


def kronecker_lift(sys: StateSpace, p: int) -> StateSpace:
    """Replace every realization matrix M by kron(M, I_p)."""
    if p < 1:
        raise DomainError(f"p must be a positive integer, got {p}")
    Ip = np.eye(p)
    return StateSpace(
        np.kron(sys.A, Ip), np.kron(sys.B, Ip), np.kron(sys.C, Ip), np.kron(sys.D, Ip)
    )


def eval_frequency(sys: StateSpace, z: complex) -> np.ndarray:
    """Evaluate C (zI - A)^{-1} B + D at a complex point z."""
    if sys.nx == 0:
        return sys.D.astype(complex)
    M = z * np.eye(sys.nx) - sys.A
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    tol = 1e-12 * (1.0 + abs(z) + np.linalg.norm(sys.A))
    if smin < tol:
        raise SingularityError(f"z={z} is numerically a pole (sigma_min={smin:.2e})")
    return sys.C @ np.linalg.solve(M, sys.B) + sys.D


def stack_outputs(top: StateSpace, bottom: StateSpace) -> StateSpace:
    """[top; bottom] sharing one input: output is the vertical stack."""
    if top.nu != bottom.nu:
        raise DimensionError("stack_outputs: input dimensions differ")
    import scipy.linalg as sla

    A = sla.block_diag(top.A, bottom.A)
    B = np.vstack([top.B, bottom.B])
    C = sla.block_diag(top.C, bottom.C)
    D = np.vstack([top.D, bottom.D])
    return StateSpace(A, B, C, D)


@dataclass(frozen=True)
class FrequencyResponse:
    """A single frequency sample of a transfer matrix."""

    z: complex
    value: np.ndarray = field(repr=False)
