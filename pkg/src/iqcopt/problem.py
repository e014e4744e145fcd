"""Affine matrix expressions and the SdpProblem container.

An SdpProblem collects scalar/matrix decision variables, affine
matrix-inequality blocks, scalar linear constraints and an optional
linear objective. It is solver-agnostic; see :mod:`iqcopt.sdp` for the
conic backend. Problems serialize to a JSON interchange with all
coefficient matrices dense.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ArgumentError

# strict LMIs are realized with this relative margin
EPS_REL = 1e-7


class AffineMatrix:
    """Matrix-valued affine expression: const + sum_k x_k * coeff[k]."""

    __slots__ = ("shape", "const", "coeffs")
    __array_priority__ = 100  # so ndarray @ AffineMatrix dispatches here

    def __init__(self, shape, const=None, coeffs=None):
        self.shape = tuple(shape)
        self.const = np.zeros(self.shape) if const is None else np.asarray(const, dtype=float)
        if self.const.shape != self.shape:
            raise DimensionError("const shape mismatch")
        self.coeffs = {} if coeffs is None else coeffs

    # -- constructors -------------------------------------------------------
    @staticmethod
    def constant(M) -> "AffineMatrix":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return AffineMatrix(M.shape, M.copy())

    @staticmethod
    def lift(obj) -> "AffineMatrix":
        if isinstance(obj, AffineMatrix):
            return obj
        return AffineMatrix.constant(obj)

    # -- algebra ------------------------------------------------------------
    def copy(self) -> "AffineMatrix":
        return AffineMatrix(self.shape, self.const.copy(),
                            {k: v.copy() for k, v in self.coeffs.items()})

    def __add__(self, other):
        other = AffineMatrix.lift(other)
        if other.shape != self.shape:
            raise DimensionError(f"add: {self.shape} vs {other.shape}")
        out = self.copy()
        out.const = out.const + other.const
        for k, v in other.coeffs.items():
            out.coeffs[k] = out.coeffs.get(k, 0.0) + v
        return out

    __radd__ = __add__

    def __neg__(self):
        return AffineMatrix(self.shape, -self.const,
                            {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-AffineMatrix.lift(other))

    def __rsub__(self, other):
        return AffineMatrix.lift(other) + (-self)

    def __mul__(self, scalar):
        s = float(scalar)
        return AffineMatrix(self.shape, s * self.const,
                            {k: s * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        """Affine @ constant (right multiplication)."""
        if isinstance(other, AffineMatrix):
            if not other.coeffs:
                other = other.const
            elif not self.coeffs:
                return AffineMatrix.lift(other).__rmatmul__(self.const)
            else:
                raise ArgumentError("product of two non-constant expressions")
        T = np.atleast_2d(np.asarray(other, dtype=float))
        out_shape = (self.shape[0], T.shape[1])
        return AffineMatrix(out_shape, self.const @ T,
                            {k: v @ T for k, v in self.coeffs.items()})

    def __rmatmul__(self, other):
        """constant @ Affine (left multiplication)."""
        T = np.atleast_2d(np.asarray(other, dtype=float))
        out_shape = (T.shape[0], self.shape[1])
        return AffineMatrix(out_shape, T @ self.const,
                            {k: T @ v for k, v in self.coeffs.items()})

    @property
    def T(self) -> "AffineMatrix":
        return AffineMatrix(self.shape[::-1], self.const.T,
                            {k: v.T for k, v in self.coeffs.items()})

    def sym(self) -> "AffineMatrix":
        return 0.5 * (self + self.T)

    def trace(self) -> "AffineMatrix":
        out = AffineMatrix((1, 1), np.array([[np.trace(self.const)]]))
        for k, v in self.coeffs.items():
            out.coeffs[k] = np.array([[np.trace(v)]])
        return out

    def entry(self, i, j) -> "AffineMatrix":
        out = AffineMatrix((1, 1), np.array([[self.const[i, j]]]))
        for k, v in self.coeffs.items():
            out.coeffs[k] = np.array([[v[i, j]]])
        return out

    def value(self, x: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        for k, v in self.coeffs.items():
            out += x[k] * v
        return out

    @staticmethod
    def block(rows) -> "AffineMatrix":
        """Assemble a block matrix from a 2-D nested list of expressions."""
        rows = [[AffineMatrix.lift(b) for b in r] for r in rows]
        heights = [r[0].shape[0] for r in rows]
        widths = [b.shape[1] for b in rows[0]]
        for r in rows:
            if [b.shape[1] for b in r] != widths:
                raise DimensionError("block: inconsistent column widths")
            if len({b.shape[0] for b in r}) != 1:
                raise DimensionError("block: inconsistent row heights")
        total = (sum(heights), sum(widths))
        ro = np.concatenate([[0], np.cumsum(heights)])
        co = np.concatenate([[0], np.cumsum(widths)])
        out = AffineMatrix(total)
        for i, r in enumerate(rows):
            for j, b in enumerate(r):
                out.const[ro[i]:ro[i + 1], co[j]:co[j + 1]] = b.const
                for k, v in b.coeffs.items():
                    if k not in out.coeffs:
                        out.coeffs[k] = np.zeros(total)
                    out.coeffs[k][ro[i]:ro[i + 1], co[j]:co[j + 1]] = v
        return out


def congruence(T, X: AffineMatrix) -> AffineMatrix:
    """T^T X T for a constant outer factor T."""
    return (X.__rmatmul__(np.asarray(T, dtype=float).T)) @ np.asarray(T, dtype=float)


def blkdiag(*exprs) -> AffineMatrix:
    exprs = [AffineMatrix.lift(e) for e in exprs]
    rows = []
    for i, e in enumerate(exprs):
        row = []
        for j, f in enumerate(exprs):
            row.append(e if i == j else np.zeros((e.shape[0], f.shape[1])))
        rows.append(row)
    return AffineMatrix.block(rows)


@dataclass
class VariableInfo:
    name: str
    kind: str          # 'scalar' | 'symmetric' | 'matrix'
    shape: tuple
    offset: int
    size: int


@dataclass
class LmiBlock:
    name: str
    expr: AffineMatrix
    sense: str          # 'neg': expr <= -eps I ; 'pos': expr >= eps I
    eps: float


@dataclass
class LinearConstraintRow:
    coeffs: dict         # sparse {flat variable index: coefficient}
    sense: str           # '<=' | '>=' | '=='
    rhs: float
    name: str = ""

    def dense(self, nvars: int) -> np.ndarray:
        row = np.zeros(nvars)
        for k, v in self.coeffs.items():
            row[k] = v
        return row

    def evaluate(self, x: np.ndarray) -> float:
        return float(sum(v * x[k] for k, v in self.coeffs.items()))


class SdpProblem:
    """Block-LMI feasibility/minimization problem over scalar variables."""

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: list[VariableInfo] = []
        self._by_name: dict[str, VariableInfo] = {}
        self.nvars = 0
        self.blocks: list[LmiBlock] = []
        self.linear: list[LinearConstraintRow] = []
        self.objective: AffineMatrix | None = None  # 1x1, minimized

    # -- variables ----------------------------------------------------------
    def _register(self, name, kind, shape, size) -> VariableInfo:
        if name in self._by_name:
            raise ArgumentError(f"duplicate variable name {name!r}")
        info = VariableInfo(name, kind, shape, self.nvars, size)
        self.variables.append(info)
        self._by_name[name] = info
        self.nvars += size
        return info

    def add_scalar(self, name: str) -> AffineMatrix:
        info = self._register(name, "scalar", (1, 1), 1)
        return AffineMatrix((1, 1), coeffs={info.offset: np.array([[1.0]])})

    def add_symmetric(self, name: str, n: int) -> AffineMatrix:
        info = self._register(name, "symmetric", (n, n), n * (n + 1) // 2)
        expr = AffineMatrix((n, n))
        k = info.offset
        for i in range(n):
            for j in range(i, n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                E[j, i] = 1.0
                expr.coeffs[k] = E
                k += 1
        return expr

    def add_matrix(self, name: str, rows: int, cols: int) -> AffineMatrix:
        info = self._register(name, "matrix", (rows, cols), rows * cols)
        expr = AffineMatrix((rows, cols))
        k = info.offset
        for i in range(rows):
            for j in range(cols):
                E = np.zeros((rows, cols))
                E[i, j] = 1.0
                expr.coeffs[k] = E
                k += 1
        return expr

    def variable_expr(self, name: str) -> AffineMatrix:
        """Re-create the canonical expression of a declared variable."""
        info = self._by_name[name]
        if info.kind == "scalar":
            return AffineMatrix((1, 1), coeffs={info.offset: np.array([[1.0]])})
        n, m = info.shape
        expr = AffineMatrix(info.shape)
        k = info.offset
        if info.kind == "symmetric":
            for i in range(n):
                for j in range(i, n):
                    E = np.zeros(info.shape)
                    E[i, j] = 1.0
                    E[j, i] = 1.0
                    expr.coeffs[k] = E
                    k += 1
        else:
            for i in range(n):
                for j in range(m):
                    E = np.zeros(info.shape)
                    E[i, j] = 1.0
                    expr.coeffs[k] = E
                    k += 1
        return expr

    def extract(self, name: str, x: np.ndarray):
        """Variable value (scalar or ndarray) from a flat solution vector."""
        info = self._by_name[name]
        if info.kind == "scalar":
            return float(x[info.offset])
        return self.variable_expr(name).value(x)

    # -- constraints --------------------------------------------------------
    def add_lmi(self, expr: AffineMatrix, sense: str = "neg", eps: float = None,
                name: str = "") -> LmiBlock:
        expr = expr.sym()
        if expr.shape[0] != expr.shape[1]:
            raise DimensionError("LMI block must be square")
        if sense not in ("neg", "pos"):
            raise ArgumentError("sense must be 'neg' or 'pos'")
        if eps is None:
            eps = EPS_REL * (1.0 + np.linalg.norm(expr.const, "fro"))
        block = LmiBlock(name or f"lmi{len(self.blocks)}", expr, sense, float(eps))
        self.blocks.append(block)
        return block

    def _scalarize(self, expr: AffineMatrix):
        if expr.shape != (1, 1):
            raise DimensionError("expected a 1x1 expression")
        row = {k: v[0, 0] for k, v in expr.coeffs.items() if v[0, 0] != 0.0}
        return row, float(expr.const[0, 0])

    def add_linear(self, expr: AffineMatrix, sense: str, rhs: float = 0.0,
                   name: str = "") -> None:
        if sense not in ("<=", ">=", "=="):
            raise ArgumentError("sense must be one of <=, >=, ==")
        row, c = self._scalarize(expr)
        self.linear.append(LinearConstraintRow(row, sense, float(rhs) - c, name))

    def add_matrix_equality(self, expr: AffineMatrix, name: str = "") -> None:
        """Entrywise expr == 0 as scalar equalities."""
        r, c = expr.shape
        for i in range(r):
            for j in range(c):
                self.add_linear(expr.entry(i, j), "==", 0.0, name=f"{name}[{i},{j}]")

    def minimize(self, expr: AffineMatrix) -> None:
        if expr.shape != (1, 1):
            raise DimensionError("objective must be 1x1")
        self.objective = expr

    # -- verification -------------------------------------------------------
    def verify(self, x: np.ndarray, lin_tol: float = 1e-8,
               eig_margin: float = 1e-10):
        """Strict numerical recheck of a candidate solution.

        Strict blocks (eps > 0) must hold with the correct sign: the
        extremal eigenvalue must clear zero by eig_margin times the block
        scale. Blocks posed with eps = 0 are closed inequalities and get a
        small tolerance slack instead, since objective problems routinely
        drive them onto the boundary. Linear rows are allowed lin_tol
        slack. Returns (ok, worst violation).
        """
        ok = True
        worst = -np.inf
        for blk in self.blocks:
            V = blk.expr.value(x)
            V = 0.5 * (V + V.T)
            eigs = np.linalg.eigvalsh(V)
            scale = 1.0 + np.linalg.norm(blk.expr.const, "fro")
            slack = eig_margin * scale if blk.eps > 0 else -lin_tol * scale
            if blk.sense == "neg":
                viol = float(eigs[-1]) + slack
            else:
                viol = -(float(eigs[0]) - slack)
            worst = max(worst, viol)
            if viol > 0:
                ok = False
        for row in self.linear:
            v = row.evaluate(x)
            scale = 1.0 + abs(row.rhs) + float(np.max(np.abs(x))) if x.size else 1.0
            if row.sense == "<=":
                viol = v - row.rhs
            elif row.sense == ">=":
                viol = row.rhs - v
            else:
                viol = abs(v - row.rhs)
            if viol > lin_tol * scale:
                ok = False
            worst = max(worst, viol - lin_tol * scale)
        return ok, worst

    # -- JSON interchange ---------------------------------------------------
    def to_json_dict(self) -> dict:
        def coeffs_list(expr):
            return [{"var": int(k), "matrix": v.tolist()} for k, v in
                    sorted(expr.coeffs.items())]

        return {
            "name": self.name,
            "variables": [
                {"name": v.name, "kind": v.kind, "shape": list(v.shape),
                 "offset": v.offset, "size": v.size}
                for v in self.variables
            ],
            "blocks": [
                {"name": b.name, "sense": b.sense, "eps": b.eps,
                 "const": b.expr.const.tolist(), "coeffs": coeffs_list(b.expr)}
                for b in self.blocks
            ],
            "linear": [
                {"name": r.name, "sense": r.sense, "rhs": r.rhs,
                 "coeffs": [[int(k), float(v)] for k, v in sorted(r.coeffs.items())]}
                for r in self.linear
            ],
            "objective": None if self.objective is None else {
                "const": self.objective.const.tolist(),
                "coeffs": coeffs_list(self.objective),
            },
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SdpProblem":
        prob = SdpProblem(d.get("name", ""))
        for v in d["variables"]:
            prob._register(v["name"], v["kind"], tuple(v["shape"]), v["size"])
        prob.nvars = sum(v["size"] for v in d["variables"])

        def expr_from(shape, const, coeffs):
            e = AffineMatrix(shape, np.asarray(const, dtype=float))
            for c in coeffs:
                e.coeffs[int(c["var"])] = np.asarray(c["matrix"], dtype=float)
            return e

        for b in d["blocks"]:
            const = np.asarray(b["const"], dtype=float)
            expr = expr_from(const.shape, const, b["coeffs"])
            prob.blocks.append(LmiBlock(b["name"], expr, b["sense"], float(b["eps"])))
        for r in d["linear"]:
            prob.linear.append(LinearConstraintRow(
                {int(k): float(v) for k, v in r["coeffs"]}, r["sense"],
                float(r["rhs"]), r.get("name", "")))
        if d.get("objective"):
            o = d["objective"]
            const = np.asarray(o["const"], dtype=float)
            prob.objective = expr_from(const.shape, const, o["coeffs"])
        return prob
