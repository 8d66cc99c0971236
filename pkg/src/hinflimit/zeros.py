"""Invariant zeros, null vectors and their stable/unstable/axis partition.

Everything here works on a single :class:`~hinflimit.plant.Realization` and
its left null vectors ``(s, f)``, defined by

    (s^T f) [[A, b], [c^T, d]] = lambda (s^T 0).

Right null vectors are the left null vectors of the transposed realization;
the ``YW`` channel is already stored in transposed form.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateRealization,
    IdenticallyZeroChannel,
    NullspaceExtractionFailure,
    Unsupported,
)
from .plant import Realization, is_identically_zero


class ZeroClass(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    IMAGINARY = "imaginary"


class JordanChainWarning(UserWarning):
    """Emitted when a zero has geometric multiplicity below its algebraic one."""


@dataclass(frozen=True)
class InvariantZero:
    value: complex
    multiplicity: int
    klass: ZeroClass


@dataclass(frozen=True)
class ZeroBlock:
    """Real null-vector block satisfying ``S^T A + f c^T = Lam^T S^T``, ``S^T b + f d = 0``.

    ``S`` is ``n x k``, ``f`` has length ``k`` and ``Lam`` is ``k x k``.
    """

    S: np.ndarray
    f: np.ndarray
    Lam: np.ndarray

    @property
    def k(self) -> int:
        return self.f.shape[0]

    @staticmethod
    def empty(n: int) -> "ZeroBlock":
        return ZeroBlock(np.zeros((n, 0)), np.zeros(0), np.zeros((0, 0)))

    @staticmethod
    def stack(blocks: list, n: int) -> "ZeroBlock":
        blocks = [b for b in blocks if b.k]
        if not blocks:
            return ZeroBlock.empty(n)
        return ZeroBlock(
            np.hstack([b.S for b in blocks]),
            np.concatenate([b.f for b in blocks]),
            scipy.linalg.block_diag(*[b.Lam for b in blocks]),
        )

    def residual(self, r: Realization) -> float:
        """Frobenius residual of the defining identity, relative to ``||M||_F``."""
        if self.k == 0:
            return 0.0
        M = r.rosenbrock()
        W = np.vstack([self.S, self.f[None, :]])
        rhs = np.vstack([self.S, np.zeros((1, self.k))])
        res = W.T @ M - self.Lam.T @ rhs.T
        return float(np.linalg.norm(res) / max(1.0, np.linalg.norm(M)))


@dataclass(frozen=True)
class ImagPair:
    """Axis zero ``value`` (``Im > 0``) with complex null vector ``(s, f)``, ``f`` real positive."""

    value: complex
    s: np.ndarray
    f: complex


@dataclass(frozen=True)
class ZeroData:
    """Zeros of one channel together with their partitioned null-vector blocks.

    Attributes
    ----------
    zeros : list of InvariantZero
        Sorted by ``(Re, Im)``.
    relative_degree : int
    minus, plus, axis : ZeroBlock
        Stable, unstable (off-axis) and imaginary-axis blocks. The axis block
        holds real rows ``[Re v; -Im v]`` per conjugate pair so that its
        ``Lam^T`` is ``[[0, w], [-w, 0]]``.
    imag_pairs : list of ImagPair
    P, p : ndarray
        Infinite-zero basis, see :func:`infinite_zero_basis`.
    residuals : dict
    """

    zeros: list
    relative_degree: int
    minus: ZeroBlock
    plus: ZeroBlock
    axis: ZeroBlock
    imag_pairs: list
    P: np.ndarray
    p: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def k_minus(self) -> int:
        return self.minus.k

    @property
    def k_plus(self) -> int:
        return self.plus.k

    @property
    def all_finite(self) -> ZeroBlock:
        """Stable, unstable and axis blocks stacked in that order."""
        n = self.minus.S.shape[0]
        return ZeroBlock.stack([self.minus, self.plus, self.axis], n)


def default_tol_axis(A: np.ndarray) -> float:
    return 1e-8 * max(1.0, _norm2(A))


def default_tol_cluster(A: np.ndarray) -> float:
    return 1e-7 * max(1.0, _norm2(A))


def _norm2(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def relative_degree(r: Realization) -> int:
    """Relative degree: 0 if ``d != 0``, else smallest ``k`` with ``c^T A^{k-1} b != 0``.

    Raises
    ------
    IdenticallyZeroChannel
        If the transfer function vanishes identically.
    """
    if r.d != 0.0:
        return 0
    if is_identically_zero(r):
        raise IdenticallyZeroChannel("channel transfer function is identically zero")
    scale = (1.0 + np.linalg.norm(r.c)) * (1.0 + np.linalg.norm(r.b))
    normA = max(1.0, _norm2(r.A))
    v = r.b.copy()
    for k in range(1, r.n + 1):
        if abs(r.c @ v) > 1e3 * np.finfo(float).eps * scale * normA ** (k - 1):
            return k
        v = r.A @ v
    raise IdenticallyZeroChannel("channel transfer function is identically zero")


def _pencil(r: Realization):
    n = r.n
    N = np.zeros((n + 1, n + 1))
    N[:n, :n] = np.eye(n)
    return r.rosenbrock(), N


def _cluster(vals: np.ndarray, tol: float) -> list:
    """Greedy single-link clustering; returns list of index lists."""
    remaining = list(range(len(vals)))
    groups = []
    while remaining:
        grp = [remaining.pop(0)]
        grew = True
        while grew:
            grew = False
            for i in list(remaining):
                if min(abs(vals[i] - vals[j]) for j in grp) <= tol:
                    grp.append(i)
                    remaining.remove(i)
                    grew = True
        groups.append(grp)
    return groups


def _classify(lam: complex, tol_axis: float) -> ZeroClass:
    if lam.real < -tol_axis:
        return ZeroClass.STABLE
    if abs(lam.real) <= tol_axis:
        return ZeroClass.IMAGINARY
    return ZeroClass.UNSTABLE


def compute_zeros(
    r: Realization, tol_axis: float | None = None, tol_cluster: float | None = None
) -> list:
    """Finite invariant zeros of ``r`` via QZ on the Rosenbrock pencil.

    Parameters
    ----------
    r : Realization
    tol_axis : float, optional
        Half-width of the imaginary-axis band, default ``1e-8 max(1, ||A||_2)``.
    tol_cluster : float, optional
        Distance below which computed eigenvalues are merged into one zero,
        default ``1e-7 max(1, ||A||_2)``.

    Returns
    -------
    list of InvariantZero
        Sorted by ``(Re, Im)``; multiplicities sum to ``n - relative_degree``.

    Raises
    ------
    DegenerateRealization
        If ``(b; d)`` and ``(c; d)`` are both zero.
    IdenticallyZeroChannel
        If the pencil is singular because the transfer function vanishes.
    """
    if r.d == 0.0 and not np.any(r.b) and not np.any(r.c):
        raise DegenerateRealization("(b; d) and (c; d) are both zero")
    tol_axis = default_tol_axis(r.A) if tol_axis is None else tol_axis
    tol_cluster = default_tol_cluster(r.A) if tol_cluster is None else tol_cluster
    rd = relative_degree(r)
    nz = r.n - rd
    if nz == 0:
        return []
    M, N = _pencil(r)
    ab = scipy.linalg.eigvals(M, N, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    # most-finite first: large |beta| relative to |alpha|
    finiteness = np.abs(beta) / np.hypot(np.abs(alpha), np.abs(beta))
    order = np.argsort(-finiteness, kind="stable")[:nz]
    vals = alpha[order] / beta[order]
    zeros = []
    for grp in _cluster(vals, tol_cluster):
        lam = complex(np.mean(vals[grp]))
        if abs(lam.imag) <= tol_cluster:
            lam = complex(lam.real, 0.0)
        zeros.append([lam, len(grp)])
    # make conjugate partners exact mirror images
    for z in zeros:
        if z[0].imag > 0:
            for w in zeros:
                if w[0].imag < 0 and abs(w[0] - z[0].conjugate()) <= tol_cluster:
                    avg = (z[0] + w[0].conjugate()) / 2
                    z[0], w[0] = avg, avg.conjugate()
                    break
    out = [InvariantZero(lam, m, _classify(lam, tol_axis)) for lam, m in zeros]
    out.sort(key=lambda z: (z.value.real, z.value.imag))
    return out


def _shifted(r: Realization, lam: complex) -> np.ndarray:
    M = r.rosenbrock().astype(complex)
    n = r.n
    M[:n, :n] -= lam * np.eye(n)
    return M


def _complex_chain(r: Realization, lam: complex, mult: int, tol_null: float | None):
    """Left null vectors of ``M(lam)`` as rows of a complex matrix, plus Jordan structure.

    Returns ``(W, jordan)`` with ``W`` of shape ``(mult, n+1)`` and ``jordan``
    True when the rows form a single chain.
    """
    M = _shifted(r, lam)
    n = r.n
    U, sv, _ = np.linalg.svd(M)
    scale = max(1.0, np.linalg.norm(M, 2))
    thr = 1e-6 * scale if tol_null is None else tol_null
    g = int(np.sum(sv <= thr))
    g = max(1, min(g, mult))
    if g == mult:
        W = U[:, n + 1 - g:].conj().T
        return W, False
    if g != 1:
        raise Unsupported(
            f"zero {lam} has geometric multiplicity {g} and algebraic {mult}"
        )
    warnings.warn(
        f"invariant zero {lam:.6g} has a Jordan chain of length {mult}",
        JordanChainWarning,
        stacklevel=3,
    )
    w = U[:, -1].conj()
    w = w / np.linalg.norm(w)
    rows = [w]
    for _ in range(1, mult):
        rhs = np.concatenate([rows[-1][:n], [0.0]])
        # w_k^T M = (s_{k-1}^T, 0)  <=>  M^T w_k = rhs
        wk, *_ = np.linalg.lstsq(M.T, rhs, rcond=None)
        rows.append(wk)
    return np.array(rows), True


def _phase_fix(w: np.ndarray, n: int) -> complex:
    """Unit complex factor making the feedthrough entry real positive."""
    f = w[n]
    if abs(f) > 1e-14 * np.linalg.norm(w):
        return abs(f) / f
    k = int(np.argmax(np.abs(w)))
    return abs(w[k]) / w[k]


def _real_block(r: Realization, z: InvariantZero, tol_null) -> ZeroBlock:
    n = r.n
    lam, m = z.value, z.multiplicity
    W, chain = _complex_chain(r, lam, m, tol_null)
    if lam.imag == 0.0:
        W = W.real
        # normalize: sign so that f >= 0 (or first nonzero entry positive)
        ref = W[0]
        idx = n if abs(ref[n]) > 1e-14 * np.linalg.norm(ref) else int(np.argmax(np.abs(ref)))
        sgn = 1.0 if ref[idx] >= 0 else -1.0
        W = sgn * W
        if not chain:
            W = W / np.linalg.norm(W, axis=1, keepdims=True)
        S = W[:, :n].T
        f = W[:, n]
        Lam = lam.real * np.eye(m) + (np.eye(m, k=1) if chain else 0.0)
        return ZeroBlock(S, f, Lam)
    # complex pair: lam has Im > 0 here
    ph = _phase_fix(W[0], n)
    W = W * ph
    if not chain:
        W = W / np.linalg.norm(W, axis=1, keepdims=True)
    rows = []
    for w in W:
        rows.append(w.real)
        rows.append(-w.imag)
    R = np.array(rows)
    sig, om = lam.real, lam.imag
    blk = np.array([[sig, -om], [om, sig]])
    Lam = np.kron(np.eye(m), blk)
    if chain:
        Lam = Lam + np.kron(np.eye(m, k=1), np.eye(2))
    return ZeroBlock(R[:, :n].T, R[:, n], Lam)


def left_null_vectors(
    r: Realization, zeros: list, tol_null: float | None = None, check: bool = True
) -> ZeroBlock:
    """Stack real left null-vector blocks for ``zeros`` in the given order.

    Real zeros contribute one row per multiplicity; complex conjugate pairs
    are represented once (by the member with ``Im > 0``) as real 2x2 blocks.

    Raises
    ------
    NullspaceExtractionFailure
        If the defining identity has relative residual above ``1e-8``.
    Unsupported
        For geometric multiplicity strictly between 1 and the algebraic one.
    """
    n = r.n
    blocks = []
    for z in zeros:
        if z.value.imag < 0:
            continue
        blk = _real_block(r, z, tol_null)
        if check:
            res = blk.residual(r)
            if res > 1e-8:
                raise NullspaceExtractionFailure(
                    f"null vector residual {res:.2e} for zero {z.value}"
                )
        blocks.append(blk)
    return ZeroBlock.stack(blocks, n)


def right_null_vectors(
    r: Realization, zeros: list, tol_null: float | None = None, check: bool = True
) -> ZeroBlock:
    """Right null vectors ``[[A, b], [c^T, d]] (t; g) = lambda (t; 0)``.

    These are the left null vectors of ``r.transposed()``; the returned block
    satisfies ``T^T A^T + g b^T = Omega^T T^T`` and ``T^T c + g d = 0``.
    """
    return left_null_vectors(r.transposed(), zeros, tol_null, check)


def infinite_zero_basis(r: Realization) -> tuple:
    """Columns spanning the infinite-zero directions of the left pencil.

    For relative degree ``rd >= 1`` returns ``P = [0, c, A^T c, ..., (A^T)^{rd-2} c]``
    and ``p = e_1`` (length ``rd``). For ``rd = 0`` returns the single
    column ``(0; 1)``.
    """
    n = r.n
    rd = relative_degree(r)
    k = max(rd, 1)
    P = np.zeros((n, k))
    p = np.zeros(k)
    p[0] = 1.0
    v = r.c.copy()
    for j in range(1, rd):
        P[:, j] = v
        v = r.A.T @ v
    return P, p


def partition_zeros(zd: ZeroData) -> tuple:
    """Return ``(minus, plus, imag_pairs)`` of ``zd``."""
    return zd.minus, zd.plus, zd.imag_pairs


def analyze(
    r: Realization,
    tol_axis: float | None = None,
    tol_cluster: float | None = None,
    tol_null: float | None = None,
) -> ZeroData:
    """Compute zeros, null vectors and the stable/unstable/axis partition of ``r``.

    Raises
    ------
    Unsupported
        For an axis zero at the origin or a repeated axis zero.
    """
    n = r.n
    zeros = compute_zeros(r, tol_axis, tol_cluster)
    rd = relative_degree(r)
    stable = [z for z in zeros if z.klass is ZeroClass.STABLE]
    unstable = [z for z in zeros if z.klass is ZeroClass.UNSTABLE]
    axis = [z for z in zeros if z.klass is ZeroClass.IMAGINARY]
    tol_c = default_tol_cluster(r.A) if tol_cluster is None else tol_cluster
    for z in axis:
        if abs(z.value) <= tol_c:
            raise Unsupported("invariant zero at the origin")
        if z.multiplicity > 1:
            raise Unsupported(f"repeated imaginary-axis zero {z.value}")
    # snap to the axis so that the rotation block is exact
    axis_snapped = [
        InvariantZero(complex(0.0, z.value.imag), 1, ZeroClass.IMAGINARY) for z in axis
    ]
    minus = left_null_vectors(r, stable, tol_null)
    plus = left_null_vectors(r, unstable, tol_null)
    ax = left_null_vectors(r, axis_snapped, tol_null)
    pairs = []
    for z in axis_snapped:
        if z.value.imag <= 0:
            continue
        W, _ = _complex_chain(r, z.value, 1, tol_null)
        w = W[0] * _phase_fix(W[0], n)
        w = w / np.linalg.norm(w)
        pairs.append(ImagPair(z.value, w[:n], complex(w[n])))
    P, p = infinite_zero_basis(r)
    res = {
        "minus": minus.residual(r),
        "plus": plus.residual(r),
        "axis": ax.residual(r),
    }
    return ZeroData(zeros, rd, minus, plus, ax, pairs, P, p, res)
