"""Sample-based empirical lower bounds for the noise-amplification level.

Random objectives are either quadratics with spectrum in [m, L] or
separable functions with per-coordinate Hessian c1 + c2 cos(w z); both
have their minimizer at the origin by construction, so simulated state
deviations are measured directly against zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .algorithms import AlgorithmRealization, SectorBounds
from .errors import ArgumentError, DivergenceError, DomainError

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class RandomFunctionSpec:
    """A sampled objective with gradient in closed form.

    quadratic: grad(z) = Q z with m <= eig(Q) <= L.
    cosine: per coordinate grad_i(z) = c1 z_i + (c2/w) sin(w z_i); the
    Hessian range is [c1 - |c2|, c1 + |c2|], kept inside [m, L].
    """

    kind: str
    p: int
    Q: np.ndarray = field(default=None, repr=False)
    c1: np.ndarray = None
    c2: np.ndarray = None
    omega: np.ndarray = None

    def gradient(self, Z: np.ndarray) -> np.ndarray:
        """Vectorized gradient; Z has shape (..., p)."""
        if self.kind == "quadratic":
            return Z @ self.Q.T
        return self.c1 * Z + (self.c2 / self.omega) * np.sin(self.omega * Z)

    def hessian_range(self, grid=None):
        if self.kind == "quadratic":
            eigs = np.linalg.eigvalsh(self.Q)
            return float(eigs[0]), float(eigs[-1])
        lo = np.min(self.c1 - np.abs(self.c2))
        hi = np.max(self.c1 + np.abs(self.c2))
        return float(lo), float(hi)


def sample_function(bounds: SectorBounds, p: int, kind: str,
                    rng: np.random.Generator) -> RandomFunctionSpec:
    """Draw one objective whose Hessian stays inside [m, L] everywhere."""
    m, L = bounds.m, bounds.L
    if kind == "quadratic":
        if p == 1:
            Q = np.array([[rng.uniform(m, L)]])
        else:
            G = rng.normal(size=(p, p))
            Qmat, _ = np.linalg.qr(G)
            eigs = rng.uniform(m, L, size=p)
            # include the endpoints often enough to exercise the sector edges
            if rng.uniform() < 0.5:
                eigs[0] = m
            if rng.uniform() < 0.5:
                eigs[-1] = L
            Q = Qmat @ np.diag(eigs) @ Qmat.T
            Q = 0.5 * (Q + Q.T)
        return RandomFunctionSpec(kind="quadratic", p=p, Q=Q)
    if kind == "cosine":
        c1 = rng.uniform(m, L, size=p)
        amp = np.minimum(c1 - m, L - c1)
        c2 = rng.uniform(-1.0, 1.0, size=p) * amp
        omega = rng.uniform(0.5, 5.0, size=p)
        return RandomFunctionSpec(kind="cosine", p=p, c1=c1, c2=c2, omega=omega)
    raise ArgumentError(f"unknown function kind {kind!r}")


@dataclass(frozen=True)
class SimulationRun:
    algo: AlgorithmRealization
    spec: RandomFunctionSpec
    seed: int
    k_max: int
    realizations: int
    estimate: float
    second_moments: np.ndarray = field(repr=False, default=None)


def simulate_h2(algo: AlgorithmRealization, spec: RandomFunctionSpec,
                k_max: int, realizations: int, seed: int,
                noise_scale: float = 1.0) -> SimulationRun:
    """Empirical time-averaged output second moment under white gradient noise.

    Iterates x+ = A x + B (grad(C x) + W) from the equilibrium, with W
    i.i.d. standard normal, and returns
    sqrt( (1/k_max) sum_k mean_N ||D x_k||^2 ).
    """
    if k_max < 1 or realizations < 1:
        raise DomainError("k_max and realizations must be positive")
    rng = np.random.default_rng(np.random.PCG64(seed))
    p, n = algo.p, algo.n
    X = np.zeros((realizations, n * p))   # minimizer of every sampled spec is 0
    A_T = algo.A.T
    B_T = algo.B.T
    C_T = algo.C.T
    D_T = algo.D.T
    sums = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        Y = X @ D_T
        sums[k] = np.mean(np.sum(Y * Y, axis=1))
        W = rng.standard_normal(size=(realizations, p)) * noise_scale
        G = spec.gradient(X @ C_T)
        X = X @ A_T + (G + W) @ B_T
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"trajectory diverged at step {k}")
    estimate = float(np.sqrt(np.sum(sums) / k_max))
    return SimulationRun(algo=algo, spec=spec, seed=seed, k_max=k_max,
                         realizations=realizations, estimate=estimate,
                         second_moments=sums)
