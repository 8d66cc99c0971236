"""Dense block-diagonal semidefinite programming.

Problems are held in the standard form

    (P)  min <C, X>   s.t.  <A_j, X> = b_j (j = 1..m),  X = diag(X_1, ..., X_p) >= 0
    (D)  max b^T y    s.t.  Z = C - sum_j y_j A_j >= 0

An LMI ``min d^T y s.t. sum_j y_j L_j - L_0 >= 0`` is the dual side with
``C = -L_0``, ``A_j = -L_j`` and ``b = -d``; the standard side is then its
Lagrangian dual. :class:`LmiBuilder` assembles such problems from affine
matrix expressions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg


class SdpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"
    NEAR_SINGULAR = "NearSingular"
    STOPPED = "Stopped"


@dataclass
class SdpProblem:
    """Block-diagonal SDP in standard form.

    Attributes
    ----------
    blocks : list of int
        Block dimensions.
    C : list of ndarray
        Objective blocks.
    A : list of ndarray
        Per block, a stack of shape ``(m, n_k, n_k)`` of constraint matrices.
    b : ndarray
        Right-hand sides, length ``m``.
    names : list of str
        Optional labels for blocks.
    meta : dict
        Free-form data used by assemblers (variable layout, sign conventions).
    """

    blocks: list
    C: list
    A: list
    b: np.ndarray
    names: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.shape[0]
        for k, n in enumerate(self.blocks):
            if self.C[k].shape != (n, n) or self.A[k].shape != (m, n, n):
                raise ValueError(f"block {k} has inconsistent dimensions")
        if not self.names:
            self.names = [f"B{k}" for k in range(len(self.blocks))]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def op(self, X: list) -> np.ndarray:
        """``A(X)_j = sum_k <A_jk, X_k>``."""
        out = np.zeros(self.m)
        for Ak, Xk in zip(self.A, X):
            out += Ak.reshape(self.m, -1) @ Xk.reshape(-1)
        return out

    def adj(self, y: np.ndarray) -> list:
        """``sum_j y_j A_j`` blockwise."""
        return [np.tensordot(y, Ak, axes=1) for Ak in self.A]

    def slack(self, y: np.ndarray) -> list:
        """``C - sum_j y_j A_j`` blockwise."""
        return [Ck - Sk for Ck, Sk in zip(self.C, self.adj(y))]

    def primal_objective(self, X: list) -> float:
        return float(sum(np.vdot(Ck, Xk) for Ck, Xk in zip(self.C, X)))


@dataclass
class SdpSolution:
    """Final iterate of :func:`sdp_solve`.

    ``X`` solves the standard side and ``(y, Z)`` the LMI side.
    """

    X: list
    y: np.ndarray
    Z: list
    primal_objective: float
    dual_objective: float
    gap: float
    status: SdpStatus
    iterations: int
    primal_infeasibility: float
    dual_infeasibility: float


@dataclass
class SdpOptions:
    max_iter: int = 100
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    step_fraction: float = 0.98
    max_block: int = 60
    early_stop: Callable | None = None


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + np.swapaxes(M, -1, -2)) / 2


def _min_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest ``a <= 1`` (times fraction later) with ``L L^T + a D >= 0``."""
    n = L.shape[0]
    if n == 0:
        return np.inf
    Li = scipy.linalg.solve_triangular(L, np.eye(n), lower=True)
    M = _sym(Li @ D @ Li.T)
    lmin = np.linalg.eigvalsh(M)[0]
    if lmin >= 0:
        return np.inf
    return -1.0 / lmin


def sdp_solve(p: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    """Infeasible primal-dual path-following method with NT scaling.

    Uses Mehrotra predictor-corrector steps on dense blocks.

    Parameters
    ----------
    p : SdpProblem
    opts : SdpOptions, optional
        ``early_stop(y, Z, X)`` may return True to stop with status
        ``Stopped``.

    Returns
    -------
    SdpSolution
        ``Optimal`` means relative gap and infeasibilities below tolerance;
        ``Infeasible`` and ``Unbounded`` refer to the standard side (P) and
        are backed by approximate improving rays.

    Raises
    ------
    ValueError
        If a block exceeds ``opts.max_block``.
    """
    opts = opts or SdpOptions()
    if any(n > opts.max_block for n in p.blocks):
        raise ValueError(f"block size above cap {opts.max_block}")
    m = p.m
    nb = len(p.blocks)
    N = sum(p.blocks)
    b = p.b
    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.sum(Ck ** 2) for Ck in p.C))
    Aflat = [Ak.reshape(m, -1) for Ak in p.A]
    normA = np.sqrt(sum(np.sum(Ak ** 2, axis=1) for Ak in Aflat)) if m else np.zeros(0)

    xi = max(10.0, np.sqrt(N), *(((1 + np.abs(b)) / (1 + normA)).tolist() or [0.0]))
    eta = max(10.0, np.sqrt(N), normC, *(normA.tolist() or [0.0]))
    X = [xi * np.eye(n) for n in p.blocks]
    Z = [eta * np.eye(n) for n in p.blocks]
    y = np.zeros(m)

    status = SdpStatus.MAX_ITER
    it = 0
    stall = 0
    pinf = dinf = np.inf
    for it in range(1, opts.max_iter + 1):
        AX = p.op(X)
        rp = b - AX
        Aty = p.adj(y)
        Rd = [Ck - Sk - Zk for Ck, Sk, Zk in zip(p.C, Aty, Z)]
        mu = sum(np.vdot(Xk, Zk) for Xk, Zk in zip(X, Z)) / N
        pobj = p.primal_objective(X)
        dobj = float(b @ y)
        pinf = np.linalg.norm(rp) / (1 + normb)
        dinf = np.sqrt(sum(np.sum(R ** 2) for R in Rd)) / (1 + normC)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if opts.early_stop is not None and opts.early_stop(y, Z, X):
            status = SdpStatus.STOPPED
            break
        if relgap <= opts.gap_tol and pinf <= opts.feas_tol and dinf <= opts.feas_tol:
            status = SdpStatus.OPTIMAL
            break
        # diverging objectives signal improving rays
        if dobj > 1e10 * (1 + normC):
            status = SdpStatus.INFEASIBLE
            break
        if -pobj > 1e10 * (1 + normb):
            status = SdpStatus.UNBOUNDED
            break

        # NT scaling per block
        G, Gi, d, Ls = [], [], [], []
        try:
            for Xk, Zk in zip(X, Z):
                Lx = np.linalg.cholesky(Xk)
                Lz = np.linalg.cholesky(Zk)
                U, s, Vt = np.linalg.svd(Lz.T @ Lx)
                Gk = Lx @ Vt.T / np.sqrt(s)
                G.append(Gk)
                Gi.append(np.linalg.inv(Gk))
                d.append(s)
                Ls.append((Lx, Lz))
        except np.linalg.LinAlgError:
            status = SdpStatus.NEAR_SINGULAR
            break
        W = [Gk @ Gk.T for Gk in G]

        # Schur complement
        M = np.zeros((m, m))
        WRdW = []
        for k in range(nb):
            Ak = p.A[k]
            WAW = W[k] @ Ak @ W[k]
            M += Aflat[k] @ WAW.reshape(m, -1).T
            WRdW.append(W[k] @ Rd[k] @ W[k])
        M = _sym(M)
        try:
            cf = scipy.linalg.cho_factor(M)
            solve = lambda r: scipy.linalg.cho_solve(cf, r)  # noqa: E731
        except np.linalg.LinAlgError:
            reg = 1e-14 * max(1.0, np.abs(M).max())
            try:
                cf = scipy.linalg.cho_factor(M + reg * np.eye(m))
                solve = lambda r: scipy.linalg.cho_solve(cf, r)  # noqa: E731
            except np.linalg.LinAlgError:
                status = SdpStatus.NEAR_SINGULAR
                break

        def direction(Rmat):
            Rc = [G[k] @ (2 * Rmat[k] / (d[k][:, None] + d[k][None, :])) @ G[k].T for k in range(nb)]
            rhs = rp - p.op(Rc) + p.op(WRdW)
            dy = solve(rhs)
            Ady = p.adj(dy)
            dZ = [_sym(Rd[k] - Ady[k]) for k in range(nb)]
            dX = [_sym(Rc[k] - W[k] @ dZ[k] @ W[k]) for k in range(nb)]
            return dX, dy, dZ

        def steps(dX, dZ):
            ap = min([_min_step(L[0], D) for L, D in zip(Ls, dX)] + [np.inf])
            ad = min([_min_step(L[1], D) for L, D in zip(Ls, dZ)] + [np.inf])
            return min(1.0, opts.step_fraction * ap), min(1.0, opts.step_fraction * ad)

        # predictor
        R0 = [-np.diag(dk ** 2) for dk in d]
        dXa, dya, dZa = direction(R0)
        apa, ada = steps(dXa, dZa)
        mu_aff = sum(
            np.vdot(Xk + apa * dXk, Zk + ada * dZk) for Xk, dXk, Zk, dZk in zip(X, dXa, Z, dZa)
        ) / N
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        Rcorr = []
        for k in range(nb):
            dXs = Gi[k] @ dXa[k] @ Gi[k].T
            dZs = G[k].T @ dZa[k] @ G[k]
            Rcorr.append(
                sigma * mu * np.eye(p.blocks[k]) - np.diag(d[k] ** 2) - _sym(dXs @ dZs)
            )
        dX, dy, dZ = direction(Rcorr)
        ap, ad = steps(dX, dZ)
        X = [_sym(Xk + ap * dXk) for Xk, dXk in zip(X, dX)]
        y = y + ad * dy
        Z = [_sym(Zk + ad * dZk) for Zk, dZk in zip(Z, dZ)]
        if max(ap, ad) < 1e-8:
            stall += 1
            if stall >= 3:
                status = SdpStatus.NEAR_SINGULAR
                break
        else:
            stall = 0
    pobj = p.primal_objective(X)
    dobj = float(b @ y)
    return SdpSolution(
        X, y, Z, pobj, dobj, abs(pobj - dobj), status, it, float(pinf), float(dinf)
    )


# --------------------------------------------------------------------------
# affine matrix expressions


class Expr:
    """Affine matrix expression ``const + sum_j y_j coef[j]``."""

    __slots__ = ("const", "terms")
    # let ndarray @ Expr fall through to __rmatmul__
    __array_ufunc__ = None

    def __init__(self, const: np.ndarray, terms: dict | None = None):
        self.const = np.atleast_2d(np.asarray(const, dtype=float))
        self.terms = terms or {}

    @property
    def shape(self) -> tuple:
        return self.const.shape

    @staticmethod
    def zeros(p: int, q: int) -> "Expr":
        return Expr(np.zeros((p, q)))

    @property
    def T(self) -> "Expr":
        return Expr(self.const.T, {j: c.T for j, c in self.terms.items()})

    def __add__(self, other) -> "Expr":
        other = _as_expr(other, self.shape)
        terms = dict(self.terms)
        for j, c in other.terms.items():
            terms[j] = terms[j] + c if j in terms else c
        return Expr(self.const + other.const, terms)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(-self.const, {j: -c for j, c in self.terms.items()})

    def __sub__(self, other) -> "Expr":
        return self + (-_as_expr(other, self.shape))

    def __rsub__(self, other) -> "Expr":
        return _as_expr(other, self.shape) - self

    def __mul__(self, s: float) -> "Expr":
        return Expr(self.const * s, {j: c * s for j, c in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, M) -> "Expr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Expr(self.const @ M, {j: c @ M for j, c in self.terms.items()})

    def __rmatmul__(self, M) -> "Expr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Expr(M @ self.const, {j: M @ c for j, c in self.terms.items()})

    def __getitem__(self, idx) -> "Expr":
        return Expr(self.const[idx], {j: c[idx] for j, c in self.terms.items()})

    def value(self, y: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        for j, c in self.terms.items():
            out = out + y[j] * c
        return out

    def substitute(self, j: int, v: float) -> "Expr":
        """Fix variable ``j`` to ``v``."""
        terms = dict(self.terms)
        c = terms.pop(j, None)
        const = self.const if c is None else self.const + v * c
        return Expr(const, terms)


def _as_expr(x, shape) -> Expr:
    if isinstance(x, Expr):
        return x
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = np.full(shape, float(a))
    return Expr(a)


def bmat(rows: list) -> Expr:
    """Assemble a block expression; ``None`` entries are zero blocks."""
    heights = []
    for row in rows:
        h = [e.shape[0] for e in row if e is not None]
        heights.append(h[0])
    ncols = len(rows[0])
    widths = []
    for c in range(ncols):
        w = [row[c].shape[1] for row in rows if row[c] is not None]
        widths.append(w[0])
    P, Q = sum(heights), sum(widths)
    const = np.zeros((P, Q))
    terms: dict = {}
    r0 = 0
    for i, row in enumerate(rows):
        c0 = 0
        for c, e in enumerate(row):
            if e is not None:
                const[r0:r0 + heights[i], c0:c0 + widths[c]] = e.const
                for j, coef in e.terms.items():
                    if j not in terms:
                        terms[j] = np.zeros((P, Q))
                    terms[j][r0:r0 + heights[i], c0:c0 + widths[c]] = coef
            c0 += widths[c]
        r0 += heights[i]
    return Expr(const, terms)


def he(e: Expr) -> Expr:
    """``e + e^T``."""
    return e + e.T


class LmiBuilder:
    """Collect scalar and symmetric-matrix variables and LMI blocks.

    The built problem is ``min d^T y s.t. F_i(y) >= 0`` on the dual side
    of :class:`SdpProblem`.
    """

    def __init__(self):
        self.nvar = 0
        self.var_info: dict = {}
        self.blocks: list = []
        self.names: list = []
        self.objective: dict = {}

    def scalar(self, name: str) -> Expr:
        j = self.nvar
        self.nvar += 1
        self.var_info[name] = ("scalar", [j], 1)
        return Expr(np.zeros((1, 1)), {j: np.ones((1, 1))})

    def symmetric(self, name: str, k: int) -> Expr:
        idx = []
        terms = {}
        for a in range(k):
            for c in range(a, k):
                j = self.nvar
                self.nvar += 1
                E = np.zeros((k, k))
                E[a, c] = E[c, a] = 1.0
                terms[j] = E
                idx.append(j)
        self.var_info[name] = ("symmetric", idx, k)
        return Expr(np.zeros((k, k)), terms)

    def psd(self, e: Expr, name: str = ""):
        if e.shape[0] != e.shape[1]:
            raise ValueError("LMI block must be square")
        self.blocks.append(Expr(_sym(e.const), {j: _sym(c) for j, c in e.terms.items()}))
        self.names.append(name or f"B{len(self.blocks) - 1}")

    def minimize(self, e: Expr):
        self.objective = {j: float(c[0, 0]) for j, c in e.terms.items()}

    def build(self, drop_unused: bool = True) -> SdpProblem:
        m = self.nvar
        used = np.zeros(m, dtype=bool)
        for blk in self.blocks:
            for j, c in blk.terms.items():
                if np.any(c != 0.0):
                    used[j] = True
        if drop_unused:
            for j in range(m):
                if not used[j] and self.objective.get(j, 0.0) != 0.0:
                    raise ValueError("objective variable absent from all blocks")
            keep = np.flatnonzero(used)
        else:
            keep = np.arange(m)
        remap = {int(j): i for i, j in enumerate(keep)}
        mm = len(keep)
        C, A = [], []
        for blk in self.blocks:
            n = blk.shape[0]
            C.append(blk.const.copy())
            Ak = np.zeros((mm, n, n))
            for j, c in blk.terms.items():
                if j in remap:
                    Ak[remap[j]] = -c
            A.append(Ak)
        d = np.array([self.objective.get(int(j), 0.0) for j in keep])
        meta = {
            "var_info": self.var_info,
            "keep": keep,
            "remap": remap,
            "nvar": m,
            "lmi_blocks": self.blocks,
        }
        return SdpProblem([b.shape[0] for b in self.blocks], C, A, -d, list(self.names), meta)


def full_y(p: SdpProblem, y: np.ndarray) -> np.ndarray:
    """Expand a solver ``y`` to the builder's variable numbering (dropped ones set to 0)."""
    out = np.zeros(p.meta["nvar"])
    out[p.meta["keep"]] = y
    return out


def variable_value(p: SdpProblem, y: np.ndarray, name: str):
    kind, idx, k = p.meta["var_info"][name]
    yy = full_y(p, y)
    if kind == "scalar":
        return float(yy[idx[0]])
    M = np.zeros((k, k))
    it = iter(idx)
    for a in range(k):
        for c in range(a, k):
            M[a, c] = M[c, a] = yy[next(it)]
    return M


def lmi_values(p: SdpProblem, y: np.ndarray) -> list:
    """LMI blocks ``F_i(y) = C_i - sum_j y_j A_ij`` at a solver ``y``."""
    return p.slack(y)


def write_sdpa(p: SdpProblem, path, comment: str = "") -> None:
    """Write ``p`` in sparse SDPA format.

    SDPA's primal ``min c^T x s.t. sum_i x_i F_i - F_0 >= 0`` is the LMI side
    here, with ``c = -b``, ``F_i = -A_i`` and ``F_0 = -C``.
    """
    lines = []
    for ln in (comment or "hinflimit SDP").splitlines():
        lines.append('"' + ln)
    lines.append(str(p.m))
    lines.append(str(len(p.blocks)))
    lines.append(" ".join(str(n) for n in p.blocks))
    lines.append(" ".join(repr(float(-v)) for v in p.b))

    def entries(mat_no, mats):
        for k, M in enumerate(mats):
            n = M.shape[0]
            for i in range(n):
                for j in range(i, n):
                    if M[i, j] != 0.0:
                        lines.append(f"{mat_no} {k + 1} {i + 1} {j + 1} {float(M[i, j])!r}")

    entries(0, [-Ck for Ck in p.C])
    for j in range(p.m):
        entries(j + 1, [-Ak[j] for Ak in p.A])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

