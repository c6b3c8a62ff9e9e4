"""Small conic modelling layer and solver adapters.

A :class:`ConicProgram` holds real decision variables and affine
constraint blocks of four kinds: equalities, nonnegativity, second-order
cones and PSD cones (rotated cones are rewritten as ordinary ones).
Affine expressions are dense numpy tensors, which is plenty for the
program sizes met here (a few hundred variables).

Complex quantities are carried by :class:`CAffine`, a pair of real
:class:`Affine` objects.  A Hermitian PSD constraint is imposed through
the real embedding ``[[Re H, -Im H], [Im H, Re H]] >= 0``.
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SQRT2 = np.sqrt(2.0)


# ----------------------------------------------------------------------
# affine expressions


class Affine:
    """Real affine expression ``A @ x + b`` with arbitrary output shape.

    ``A`` has shape ``shape + (n,)`` where ``n`` is the number of program
    variables known when the expression was built.  Expressions of
    different widths are zero-padded when combined.
    """

    __array_ufunc__ = None

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.shape[:-1] != self.b.shape:
            raise ValueError(f"shape mismatch {self.A.shape} vs {self.b.shape}")

    @classmethod
    def const(cls, b, n: int = 0) -> "Affine":
        b = np.asarray(b, dtype=float)
        return cls(np.zeros(b.shape + (n,)), b)

    @property
    def shape(self):
        return self.b.shape

    @property
    def n(self) -> int:
        return self.A.shape[-1]

    @property
    def ndim(self) -> int:
        return self.b.ndim

    def padded(self, n: int) -> np.ndarray:
        if n == self.n:
            return self.A
        if n < self.n:
            raise ValueError("cannot shrink an affine expression")
        pad = np.zeros(self.shape + (n - self.n,))
        return np.concatenate([self.A, pad], axis=-1)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.A @ x[: self.n] + self.b

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, CAffine):
            return NotImplemented
        if not isinstance(other, Affine):
            other = np.asarray(other, dtype=float)
            return Affine(np.broadcast_to(self.A, np.broadcast_shapes(self.shape, other.shape) + (self.n,)).copy(),
                          self.b + other)
        n = max(self.n, other.n)
        shape = np.broadcast_shapes(self.shape, other.shape)
        A = np.broadcast_to(self.padded(n), shape + (n,)) + np.broadcast_to(other.padded(n), shape + (n,))
        return Affine(A, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.A, -self.b)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, (Affine, CAffine)):
            raise TypeError("affine * affine is not affine")
        c = np.asarray(c)
        if np.iscomplexobj(c):
            return CAffine(self, Affine.const(np.zeros(self.shape), self.n)) * c
        return Affine(self.A * c[..., None], self.b * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / np.asarray(c, dtype=float))

    def __getitem__(self, idx):
        return Affine(self.A[idx] if not isinstance(idx, tuple) else self.A[idx + (slice(None),)], self.b[idx])

    def __matmul__(self, C):
        C = np.asarray(C)
        if np.iscomplexobj(C):
            return CAffine(self, Affine.const(np.zeros(self.shape), self.n)) @ C
        if self.ndim == 1:
            A = np.tensordot(self.A, C, axes=([0], [0]))  # (n, ...) -> move n last
            A = np.moveaxis(A, 0, -1)
        else:
            A = np.moveaxis(np.tensordot(self.A, C, axes=([self.ndim - 1], [0])), self.ndim - 1, -1)
        return Affine(A, self.b @ C)

    def __rmatmul__(self, C):
        C = np.asarray(C)
        if np.iscomplexobj(C):
            return C @ CAffine(self, Affine.const(np.zeros(self.shape), self.n))
        A = np.tensordot(C, self.A, axes=([C.ndim - 1], [0]))
        return Affine(A, C @ self.b)

    @property
    def T(self):
        if self.ndim < 2:
            return self
        return Affine(np.swapaxes(self.A, 0, 1), self.b.T)

    def sum(self, axis=None):
        if axis is None:
            return Affine(self.A.reshape(-1, self.n).sum(axis=0), self.b.sum())
        return Affine(self.A.sum(axis=axis), self.b.sum(axis=axis))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        b = self.b.reshape(shape)
        return Affine(self.A.reshape(b.shape + (self.n,)), b)

    def flatten(self):
        return self.reshape(-1)

    def __repr__(self):
        return f"Affine(shape={self.shape}, n={self.n})"


def _as_affine(x, n: int = 0) -> Affine:
    if isinstance(x, Affine):
        return x
    return Affine.const(x, n)


def concat(parts, axis: int = 0) -> Affine:
    parts = [_as_affine(p) for p in parts]
    n = max(p.n for p in parts)
    parts = [p.reshape(1) if p.ndim == 0 else p for p in parts]
    return Affine(np.concatenate([p.padded(n) for p in parts], axis=axis),
                  np.concatenate([p.b for p in parts], axis=axis))


def stack(parts, axis: int = 0) -> Affine:
    parts = [_as_affine(p) for p in parts]
    n = max(p.n for p in parts)
    return Affine(np.stack([p.padded(n) for p in parts], axis=axis),
                  np.stack([p.b for p in parts], axis=axis))


def block(rows) -> Affine:
    """Assemble a 2-d block matrix from a nested list of 2-d pieces."""
    return concat([concat(r, axis=1) for r in rows], axis=0)


class CAffine:
    """Complex affine expression ``re + 1j * im`` over real variables."""

    __array_ufunc__ = None

    def __init__(self, re: Affine, im: Affine):
        if re.shape != im.shape:
            raise ValueError("real and imaginary shapes differ")
        self.re = re
        self.im = im

    @classmethod
    def const(cls, c, n: int = 0) -> "CAffine":
        c = np.asarray(c, dtype=complex)
        return cls(Affine.const(c.real, n), Affine.const(c.imag, n))

    @property
    def shape(self):
        return self.re.shape

    @property
    def n(self) -> int:
        return max(self.re.n, self.im.n)

    def value(self, x):
        return self.re.value(x) + 1j * self.im.value(x)

    def _lift(self, other):
        if isinstance(other, CAffine):
            return other
        if isinstance(other, Affine):
            return CAffine(other, Affine.const(np.zeros(other.shape), other.n))
        return CAffine.const(other)

    def __add__(self, other):
        other = self._lift(other)
        return CAffine(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return CAffine(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, (Affine, CAffine)):
            raise TypeError("affine * affine is not affine")
        c = np.asarray(c, dtype=complex)
        return CAffine(self.re * c.real - self.im * c.imag, self.im * c.real + self.re * c.imag)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / np.asarray(c))

    def __matmul__(self, C):
        C = np.asarray(C, dtype=complex)
        return CAffine(self.re @ C.real - self.im @ C.imag, self.re @ C.imag + self.im @ C.real)

    def __rmatmul__(self, C):
        C = np.asarray(C, dtype=complex)
        return CAffine(C.real @ self.re - C.imag @ self.im, C.real @ self.im + C.imag @ self.re)

    def __getitem__(self, idx):
        return CAffine(self.re[idx], self.im[idx])

    def conj(self):
        return CAffine(self.re, -self.im)

    @property
    def T(self):
        return CAffine(self.re.T, self.im.T)

    @property
    def H(self):
        return CAffine(self.re.T, -self.im.T)

    def sum(self, axis=None):
        return CAffine(self.re.sum(axis), self.im.sum(axis))

    def reshape(self, *shape):
        return CAffine(self.re.reshape(*shape), self.im.reshape(*shape))

    def flatten(self):
        return self.reshape(-1)

    def real_parts(self) -> Affine:
        """Stacked ``[Re, Im]`` of the flattened expression (for norms)."""
        return concat([self.re.flatten(), self.im.flatten()])

    def __repr__(self):
        return f"CAffine(shape={self.shape}, n={self.n})"


def cconcat(parts, axis: int = 0) -> CAffine:
    parts = [p if isinstance(p, CAffine) else CAffine.const(p) for p in parts]
    return CAffine(concat([p.re for p in parts], axis), concat([p.im for p in parts], axis))


def cblock(rows) -> CAffine:
    rows = [[p if isinstance(p, CAffine) else CAffine.const(p) for p in r] for r in rows]
    return CAffine(block([[p.re for p in r] for r in rows]), block([[p.im for p in r] for r in rows]))


def real_inner(C: np.ndarray, X: CAffine) -> Affine:
    """``Re(sum(conj(C) * X))`` as a real affine scalar."""
    C = np.asarray(C, dtype=complex)
    return (X.re * C.real).sum() + (X.im * C.imag).sum()


# ----------------------------------------------------------------------
# program


@dataclass
class _Block:
    kind: str  # eq | nonneg | soc | psd
    expr: Affine  # eq/nonneg/soc: 1-d, soc first entry is the bound; psd: square 2-d
    label: str


class ConicProgram:
    """Linear objective over real variables with conic constraint blocks."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.n = 0
        self.variables: list[tuple[str, int, int, str]] = []
        self.blocks: list[_Block] = []
        self.objective: Affine = Affine.const(0.0)
        self.sense = "max"

    # variables --------------------------------------------------------
    def _new(self, size: int, name: str, kind: str) -> int:
        start = self.n
        self.n += size
        self.variables.append((name, start, size, kind))
        return start

    def variable(self, shape=(), name: str = "x") -> Affine:
        shape = tuple(np.atleast_1d(shape)) if shape != () else ()
        size = int(np.prod(shape)) if shape else 1
        start = self._new(size, name, "real")
        A = np.zeros((size, self.n))
        A[np.arange(size), start + np.arange(size)] = 1.0
        return Affine(A.reshape(shape + (self.n,)), np.zeros(shape))

    def complex_variable(self, shape, name: str = "z") -> CAffine:
        """Complex variable stored as interleaved (re, im) pairs."""
        shape = tuple(np.atleast_1d(shape))
        size = int(np.prod(shape))
        start = self._new(2 * size, name, "complex")
        idx = np.arange(size)
        Ar = np.zeros((size, self.n))
        Ai = np.zeros((size, self.n))
        Ar[idx, start + 2 * idx] = 1.0
        Ai[idx, start + 2 * idx + 1] = 1.0
        zero = np.zeros(shape)
        return CAffine(Affine(Ar.reshape(shape + (self.n,)), zero), Affine(Ai.reshape(shape + (self.n,)), zero))

    def hermitian_variable(self, k: int, name: str = "H") -> CAffine:
        """Hermitian ``k x k`` matrix with ``k**2`` real parameters."""
        iu = np.triu_indices(k, 1)
        n_off = len(iu[0])
        start = self._new(k + 2 * n_off, name, "hermitian")
        Ar = np.zeros((k, k, self.n))
        Ai = np.zeros((k, k, self.n))
        d = np.arange(k)
        Ar[d, d, start + d] = 1.0
        ids = start + k + 2 * np.arange(n_off)
        Ar[iu[0], iu[1], ids] = 1.0
        Ar[iu[1], iu[0], ids] = 1.0
        Ai[iu[0], iu[1], ids + 1] = 1.0
        Ai[iu[1], iu[0], ids + 1] = -1.0
        zero = np.zeros((k, k))
        return CAffine(Affine(Ar, zero), Affine(Ai, zero))

    # constraints -------------------------------------------------------
    def maximize(self, expr) -> None:
        self.objective = _as_affine(expr)
        self.sense = "max"

    def minimize(self, expr) -> None:
        self.objective = _as_affine(expr)
        self.sense = "min"

    def add_eq(self, expr, label: str = "eq") -> None:
        """``expr == 0``."""
        self.blocks.append(_Block("eq", _as_affine(expr).flatten(), label))

    def add_nonneg(self, expr, label: str = "nonneg") -> None:
        """``expr >= 0`` elementwise."""
        self.blocks.append(_Block("nonneg", _as_affine(expr).flatten(), label))

    def add_le(self, lhs, rhs, label: str = "le") -> None:
        self.add_nonneg(_as_affine(rhs) - lhs, label)

    def add_soc(self, t, z, label: str = "soc") -> None:
        """``||z|| <= t``."""
        self.blocks.append(_Block("soc", concat([_as_affine(t).reshape(1), _as_affine(z).flatten()]), label))

    def add_rsoc(self, u, v, z, label: str = "rsoc") -> None:
        """``2 u v >= ||z||^2`` with ``u, v >= 0``."""
        u = _as_affine(u).reshape(1)
        v = _as_affine(v).reshape(1)
        z = _as_affine(z).flatten()
        self.add_soc(u + v, concat([z * SQRT2, u - v]), label)

    def add_psd(self, M, label: str = "psd") -> None:
        """Symmetric affine matrix ``M >= 0`` (symmetrised on entry)."""
        M = _as_affine(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("PSD block must be square")
        M = (M + M.T) * 0.5
        self.blocks.append(_Block("psd", M, label))

    def add_hermitian_psd(self, H: CAffine, label: str = "hpsd") -> None:
        self.add_psd(block([[H.re, -H.im], [H.im, H.re]]), label)

    # diagnostics -------------------------------------------------------
    def counts(self) -> dict:
        out = {"eq": 0, "nonneg": 0, "soc": 0, "psd": 0}
        for b in self.blocks:
            out[b.kind] += 1
        return out

    def residuals(self, x: np.ndarray) -> list[tuple[str, str, float]]:
        """Primal violation of every block at ``x`` as ``(kind, label, viol)``."""
        out = []
        for b in self.blocks:
            val = b.expr.value(x)
            if b.kind == "eq":
                viol = float(np.max(np.abs(val))) if val.size else 0.0
            elif b.kind == "nonneg":
                viol = float(max(0.0, -np.min(val))) if val.size else 0.0
            elif b.kind == "soc":
                viol = float(max(0.0, np.linalg.norm(val[1:]) - val[0]))
            else:
                viol = float(max(0.0, -np.linalg.eigvalsh(val)[0]))
            out.append((b.kind, b.label, viol))
        return out

    def max_residual(self, x, relative: bool = False) -> float:
        """Largest block violation; ``relative`` divides each by ``1 + sum|E||x| + |e0|`` of its block."""
        res = self.residuals(x)
        if not relative:
            return max((r[2] for r in res), default=0.0)
        out = 0.0
        ax = np.abs(x)
        for b, r in zip(self.blocks, res):
            scale = 1.0 + float(np.max(np.abs(b.expr.padded(self.n)) @ ax + np.abs(b.expr.b), initial=0.0))
            out = max(out, r[2] / scale)
        return out

    def dump(self) -> str:
        """Text listing of variables, cones and (row, col, value) triplets."""
        buf = io.StringIO()
        buf.write(f"program {self.name} sense={self.sense} n={self.n}\n")
        for name, start, size, kind in self.variables:
            buf.write(f"var {name} {kind} start={start} size={size}\n")
        obj = self.objective
        buf.write("objective\n")
        for j in np.flatnonzero(obj.padded(self.n)):
            buf.write(f"  0 {j} {obj.padded(self.n)[j]:.17g}\n")
        buf.write(f"  const {float(obj.b):.17g}\n")
        row = 0
        for b in self.blocks:
            if b.kind == "psd":
                k = b.expr.shape[0]
                iu = np.triu_indices(k)
                A = b.expr.padded(self.n)[iu]
                c = b.expr.b[iu]
                buf.write(f"cone psd size={k} rows={len(c)} label={b.label}\n")
            else:
                A = b.expr.padded(self.n)
                c = b.expr.b
                buf.write(f"cone {b.kind} size={len(c)} label={b.label}\n")
            for i, j in zip(*np.nonzero(A)):
                buf.write(f"  {row + i} {j} {A[i, j]:.17g}\n")
            for i in np.flatnonzero(c):
                buf.write(f"  {row + i} const {c[i]:.17g}\n")
            row += len(c)
        return buf.getvalue()


# ----------------------------------------------------------------------
# solving


@dataclass
class SolverResult:
    status: str  # optimal | infeasible | numerical_failure | iteration_limit
    objective: float
    x: np.ndarray
    wall_time: float
    backend: str = "clarabel"
    raw_status: str = ""
    max_residual: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def value(self, expr):
        return expr.value(self.x)


RESIDUAL_TOL = 1e-6
DROP_TOL = 1e-13


def _psd_vec(M: Affine, n: int, lower: bool) -> tuple[np.ndarray, np.ndarray]:
    """Scaled triangle vectorisation, column-major.

    Clarabel stacks the upper triangle, SCS the lower one; both scale
    off-diagonal entries by sqrt(2).
    """
    k = M.shape[0]
    rows, cols = [], []
    for j in range(k):
        rng = range(j, k) if lower else range(j + 1)
        for i in rng:
            rows.append(i)
            cols.append(j)
    rows = np.array(rows)
    cols = np.array(cols)
    scale = np.where(rows == cols, 1.0, SQRT2)
    A = M.padded(n)[rows, cols] * scale[:, None]
    b = M.b[rows, cols] * scale
    return A, b


def _assemble(prog: ConicProgram, backend: str):
    n = prog.n
    order = {"eq": 0, "nonneg": 1, "soc": 2, "psd": 3}
    blocks = sorted(prog.blocks, key=lambda b: order[b.kind])
    As, bs, cones = [], [], []
    for b in blocks:
        if b.kind == "psd":
            E, e0 = _psd_vec(b.expr, n, lower=(backend == "scs"))
            cones.append(("psd", b.expr.shape[0], len(e0)))
        else:
            E, e0 = b.expr.padded(n), b.expr.b
            cones.append((b.kind, len(e0), len(e0)))
        # cone membership of e(x) = E x + e0 written as  A x + s = b  with s = e(x)
        As.append(-E)
        bs.append(e0)
    A = np.vstack(As) if As else np.zeros((0, n))
    b = np.concatenate(bs) if bs else np.zeros(0)
    # round-off entries (e.g. channels projected onto their null space) make
    # all-noise rows that the solver's equilibration blows up; drop them
    if A.size:
        A[np.abs(A) < DROP_TOL * max(1.0, float(np.abs(A).max()))] = 0.0
    c = prog.objective.padded(n)
    if prog.sense == "max":
        c = -c
    return sp.csc_matrix(A), b, c, cones


def solve(prog: ConicProgram, backend: str = "clarabel", verbose: bool = False, **settings) -> SolverResult:
    """Solve ``prog`` and verify primal residuals of the returned point."""
    if backend not in ("clarabel", "scs"):
        raise ValueError(f"unknown backend {backend!r}")
    A, b, c, cones = _assemble(prog, backend)
    t0 = time.perf_counter()
    # interior-point runs occasionally stall just short of 1e-8 accuracy on
    # nearly degenerate cones; retry with looser stopping tolerances, the
    # residual check below still decides acceptance
    ladder = [{}] if backend == "scs" else [{}, {"tol": 1e-7}, {"tol": 1e-6}]
    for extra in ladder:
        opts = dict(settings)
        if "tol" in extra:
            for key in ("tol_gap_abs", "tol_gap_rel", "tol_feas"):
                opts.setdefault(key, extra["tol"])
        if backend == "clarabel":
            status, raw, x = _solve_clarabel(A, b, c, cones, prog.n, verbose, opts)
        else:
            status, raw, x = _solve_scs(A, b, c, cones, prog.n, verbose, opts)
        obj = float("nan")
        res = float("nan")
        if x is not None:
            obj = float(prog.objective.value(x))
            res = prog.max_residual(x, relative=True)
            if status == "optimal" and res > RESIDUAL_TOL:
                status = "numerical_failure"
        if status in ("optimal", "infeasible"):
            break
    wall = time.perf_counter() - t0
    return SolverResult(status=status, objective=obj, x=x if x is not None else np.full(prog.n, np.nan),
                        wall_time=wall, backend=backend, raw_status=raw, max_residual=res)


def _small_gap(p, d, rtol: float = 1e-5) -> bool:
    if not (np.isfinite(p) and np.isfinite(d)):
        return False
    return abs(p - d) <= rtol * max(1.0, abs(p))


def _solve_clarabel(A, b, c, cones, n, verbose, settings):
    import clarabel

    ccones = []
    for kind, size, _ in cones:
        if kind == "eq":
            ccones.append(clarabel.ZeroConeT(size))
        elif kind == "nonneg":
            ccones.append(clarabel.NonnegativeConeT(size))
        elif kind == "soc":
            ccones.append(clarabel.SecondOrderConeT(size))
        else:
            ccones.append(clarabel.PSDTriangleConeT(size))
    opts = clarabel.DefaultSettings()
    opts.verbose = verbose
    opts.max_iter = int(settings.get("max_iter", 200))
    for key in ("tol_gap_abs", "tol_gap_rel", "tol_feas", "tol_infeas_abs", "tol_infeas_rel"):
        if key in settings:
            setattr(opts, key, settings[key])
    P = sp.csc_matrix((n, n))
    solver = clarabel.DefaultSolver(P, c, A, b, ccones, opts)
    sol = solver.solve()
    raw = str(sol.status)
    x = np.asarray(sol.x, dtype=float)
    if raw in ("Solved", "SolverStatus.Solved", "AlmostSolved", "SolverStatus.AlmostSolved"):
        status = "optimal"
    elif "Infeasible" in raw:
        status = "infeasible"
        x = None
    elif "MaxIterations" in raw or "MaxTime" in raw:
        status = "iteration_limit"
    elif _small_gap(sol.obj_val, sol.obj_val_dual):
        # stalled on the dual residual with a closed gap; the primal point is
        # still screened by the residual check in solve()
        status = "optimal"
    else:
        status = "numerical_failure"
    if x is not None and not np.all(np.isfinite(x)):
        x = None
        status = "numerical_failure" if status == "optimal" else status
    return status, raw, x


def _solve_scs(A, b, c, cones, n, verbose, settings):
    import scs

    cone = {"z": 0, "l": 0, "q": [], "s": []}
    for kind, size, _ in cones:
        if kind == "eq":
            cone["z"] += size
        elif kind == "nonneg":
            cone["l"] += size
        elif kind == "soc":
            cone["q"].append(size)
        else:
            cone["s"].append(size)
    data = {"A": A, "b": b, "c": c}
    solver = scs.SCS(data, cone, verbose=verbose,
                     eps_abs=settings.get("eps_abs", 1e-9), eps_rel=settings.get("eps_rel", 1e-9),
                     max_iters=int(settings.get("max_iters", 200000)))
    sol = solver.solve()
    raw = sol["info"]["status"]
    x = np.asarray(sol["x"], dtype=float)
    if raw in ("solved", "solved_inaccurate"):
        status = "optimal"
    elif "infeasible" in raw:
        status = "infeasible"
        x = None
    elif "unbounded" in raw:
        status = "numerical_failure"
    else:
        status = "iteration_limit" if "inaccurate" in raw or "max" in raw else "numerical_failure"
    return status, raw, x


# ----------------------------------------------------------------------
# structured constraints


def add_quadratic_over_linear(prog: ConicProgram, numerator, denominator, bound, label: str = "qol") -> None:
    """``|num|^2 / den <= bound`` for complex (or real) affine ``num``.

    Encoded as the rotated cone ``2 * den * (bound / 2) >= |num|^2``; the
    cone itself keeps ``den`` and ``bound`` nonnegative.
    """
    if isinstance(numerator, CAffine):
        z = numerator.real_parts()
    else:
        z = _as_affine(numerator).flatten()
    prog.add_rsoc(_as_affine(denominator), _as_affine(bound) * 0.5, z, label)


def add_sum_squares_le(prog: ConicProgram, z, bound, label: str = "sumsq") -> None:
    """``||z||^2 <= bound``."""
    if isinstance(z, CAffine):
        z = z.real_parts()
    prog.add_rsoc(_as_affine(bound) * 0.5, Affine.const(1.0), z, label)


def build_lmi_C_lg(prog: ConicProgram, w_g: CAffine, mu_lg, omega_lg, f_hat_l, delta_l: float,
                   label: str = "C_lg") -> None:
    """S-procedure LMI bounding ``|f^H w_g|^2 <= mu`` over ``||f - f_hat|| <= delta``.

    Appends the ``(N+2) x (N+2)`` Hermitian block::

        [[1,             w^H,       -w^H f_hat         ],
         [w,             omega I,    0                 ],
         [-f_hat^H w,    0,          mu - omega delta^2]]  >= 0
    """
    f_hat_l = np.asarray(f_hat_l, dtype=complex)
    N = f_hat_l.shape[0]
    w_col = w_g.reshape(N, 1)
    a = f_hat_l.conj() @ w_g  # f_hat^H w, scalar
    mu = CAffine(_as_affine(mu_lg).reshape(1, 1), Affine.const(np.zeros((1, 1))))
    om = _as_affine(omega_lg).reshape(())
    om_eye = CAffine(om * np.eye(N) if om.ndim == 0 else om, Affine.const(np.zeros((N, N))))
    corner = mu - CAffine(om.reshape(1, 1) * delta_l ** 2, Affine.const(np.zeros((1, 1))))
    neg_a = -a.reshape(1, 1)
    H = cblock([
        [np.ones((1, 1)), w_col.H, neg_a.conj()],
        [w_col, om_eye, np.zeros((N, 1))],
        [neg_a, np.zeros((1, N)), corner],
    ])
    prog.add_hermitian_psd(H, label)


def build_lmi_C_l_tilde(prog: ConicProgram, U_tilde: CAffine, mu_tilde_l, omega_tilde_l, f_hat_l,
                        delta_l: float, label: str = "C_l") -> None:
    """S-procedure LMI bounding ``f^H U f <= mu`` over the ``delta``-ball.

    Appends the ``(N+1) x (N+1)`` Hermitian block::

        [[omega I - U,     -U f_hat                       ],
         [-f_hat^H U,      -f_hat^H U f_hat - omega delta^2 + mu]]  >= 0
    """
    f_hat_l = np.asarray(f_hat_l, dtype=complex)
    N = f_hat_l.shape[0]
    om = _as_affine(omega_tilde_l).reshape(())
    Uf = U_tilde @ f_hat_l  # (N,)
    fUf = f_hat_l.conj() @ Uf  # scalar, real for Hermitian U
    tl = CAffine(om * np.eye(N), Affine.const(np.zeros((N, N)))) - U_tilde
    corner = CAffine((_as_affine(mu_tilde_l) - om * delta_l ** 2).reshape(1, 1), Affine.const(np.zeros((1, 1)))) \
        - fUf.reshape(1, 1)
    col = -Uf.reshape(N, 1)
    H = cblock([[tl, col], [col.H, corner]])
    prog.add_hermitian_psd(H, label)


def add_lambda_min_floor(prog: ConicProgram, U_tilde: CAffine, floor_var, label: str = "lmin") -> None:
    """``U_tilde >= floor * I`` as an ``N x N`` Hermitian PSD block."""
    N = U_tilde.shape[0]
    fl = _as_affine(floor_var).reshape(())
    prog.add_hermitian_psd(U_tilde - CAffine(fl * np.eye(N), Affine.const(np.zeros((N, N)))), label)
