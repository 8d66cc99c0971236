"""LMI formulations of the output-feedback problem and an SDP oracle for its optimal level.

The full problem eliminates the controller through perpendicular matrices of
``(b2; d12; 0)`` and ``(c2; d21; 0)`` and keeps the Lyapunov variables
``X`` and ``Y``. Reduced problems work in null-vector coordinates. Every
problem is an :class:`~hinflimit.sdp.SdpProblem` whose LMI side carries the
decision variables; its standard side is the Lagrangian dual.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateChannel,
    HypothesisViolated,
    OracleInconclusive,
    StructureMismatch,
)
from .gamma import Case, classify_case
from .plant import Channel, StateSpacePlant, channel_realization
from .sdp import (
    Expr,
    LmiBuilder,
    SdpOptions,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    bmat,
    he,
    sdp_solve,
    variable_value,
)
from .zeros import ZeroBlock, ZeroData, analyze

log = logging.getLogger(__name__)

BLOCK_NAMES = ("Z", "V", "W")


def _col(v) -> np.ndarray:
    return np.reshape(np.asarray(v, dtype=float), (-1, 1))


def _const(M) -> Expr:
    return Expr(np.atleast_2d(np.asarray(M, dtype=float)))


def _times(g: Expr, M: np.ndarray) -> Expr:
    """Scalar expression ``g`` (1x1) times a constant matrix ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return Expr(g.const[0, 0] * M, {j: c[0, 0] * M for j, c in g.terms.items()})


def _channel_data(plant: StateSpacePlant, zu: ZeroData | None, yw: ZeroData | None):
    if zu is None:
        zu = analyze(channel_realization(plant, Channel.ZU))
    if yw is None:
        yw = analyze(channel_realization(plant, Channel.YW))
    return zu, yw


# --------------------------------------------------------------------------
# perpendicular matrices


def _channel_vector(plant: StateSpacePlant, channel: Channel) -> np.ndarray:
    if channel is Channel.ZU:
        return np.concatenate([plant.b2, [plant.d12, 0.0]])
    if channel is Channel.YW:
        return np.concatenate([plant.c2, [plant.d21, 0.0]])
    raise ValueError("perpendicular matrices exist for the ZU and YW channels only")


def perpendicular(
    plant: StateSpacePlant,
    channel: Channel,
    method: str = "svd",
    zd: ZeroData | None = None,
) -> np.ndarray:
    """Full-column-rank ``N`` with ``v^T N = 0`` for ``v = (b2; d12; 0)`` or ``(c2; d21; 0)``.

    Parameters
    ----------
    plant : StateSpacePlant
    channel : Channel
        ``Channel.ZU`` or ``Channel.YW``.
    method : {"svd", "nullvec"}
        ``"svd"`` returns an orthonormal basis. ``"nullvec"`` stacks the
        finite null vectors ``(S; f^T)`` of the channel, then the
        infinite-zero columns ``(P; p^T)`` when the relative degree is
        positive, then ``e_{n+2}``.
    zd : ZeroData, optional
        Zero data of the channel, computed when omitted.

    Raises
    ------
    DegenerateChannel
        If the null-vector basis is not a valid perpendicular matrix.
    """
    v = _channel_vector(plant, channel)
    n = plant.n
    if method == "svd":
        return scipy.linalg.null_space(v[None, :])
    if method != "nullvec":
        raise ValueError(f"unknown perpendicular method {method!r}")
    if not np.any(v[:-1]):
        raise DegenerateChannel(f"{channel.value} input/output vector and feedthrough vanish")
    if zd is None:
        zd = analyze(channel_realization(plant, channel))
    blk = zd.all_finite
    rd = zd.relative_degree
    P = zd.P if rd >= 1 else np.zeros((n, 0))
    p = zd.p if rd >= 1 else np.zeros(0)
    k, r = blk.k, P.shape[1]
    if k + r != n:
        raise DegenerateChannel(f"{k} finite and {r} infinite directions for n = {n}")
    N = np.zeros((n + 2, n + 1))
    N[:n, :k] = blk.S
    N[n, :k] = blk.f
    N[:n, k:n] = P
    N[n, k:n] = p
    N[n + 1, n] = 1.0
    sv = np.linalg.svd(N, compute_uv=False)
    scale = max(1.0, float(np.linalg.norm(v)))
    if sv[-1] <= 1e-10 * sv[0] or np.linalg.norm(v @ N) > 1e-8 * scale * sv[0]:
        raise DegenerateChannel(f"null-vector basis of {channel.value} is not a perpendicular matrix")
    return N


# --------------------------------------------------------------------------
# assembly


def _full_blocks(plant: StateSpacePlant, N1, N2, X: Expr, Y: Expr, g: Expr) -> list:
    A = plant.A
    b1, c1 = _col(plant.b1), _col(plant.c1)
    d11 = _const(plant.d11)
    Xc1 = X @ c1
    M1 = bmat([
        [he(A @ X), Xc1, _const(b1)],
        [Xc1.T, -g, d11],
        [_const(b1.T), d11, -g],
    ])
    Yb1 = Y @ b1
    M2 = bmat([
        [he(Y @ A), Yb1, _const(c1)],
        [Yb1.T, -g, d11],
        [_const(c1.T), d11, -g],
    ])
    n = plant.n
    I = _const(np.eye(n))
    B3 = bmat([[X, -I], [-I, Y]])
    return [-(N1.T @ M1 @ N1), -(N2.T @ M2 @ N2), B3]


def _add_blocks(lb: LmiBuilder, blocks: list, names, t: Expr | None = None) -> None:
    for B, name in zip(blocks, names):
        k = B.shape[0]
        if k == 0:
            continue
        if t is not None:
            B = B - _times(t, np.eye(k))
        lb.psd(B, name)


def assemble_lmi_full(
    plant: StateSpacePlant,
    gamma: float | None = None,
    perp: str = "svd",
    zu: ZeroData | None = None,
    yw: ZeroData | None = None,
) -> SdpProblem:
    """The elimination-of-variables LMI in the Lyapunov variables ``X`` and ``Y``.

    With ``gamma=None`` the problem is ``min gamma`` over ``(gamma, X, Y)``.
    With a fixed ``gamma`` it is the feasibility form ``max t`` subject to
    every block minus ``t I`` being PSD; ``t* > 0`` exactly when the LMI is
    strictly feasible at that level.

    The blocks are named ``Z`` and ``V`` (sizes ``n+1``) and ``W``
    (size ``2n``) after the matching dual variables. With
    ``perp="nullvec"`` and ``d12 d21 = 0`` this is the singular-case form
    whose dual carries the infinite-zero pattern.
    """
    n = plant.n
    if perp == "nullvec":
        zu, yw = _channel_data(plant, zu, yw)
    N1 = perpendicular(plant, Channel.ZU, perp, zu)
    N2 = perpendicular(plant, Channel.YW, perp, yw)
    lb = LmiBuilder()
    X = lb.symmetric("X", n)
    Y = lb.symmetric("Y", n)
    if gamma is None:
        g = lb.scalar("gamma")
        lb.minimize(g)
        t = None
    else:
        g = _const(float(gamma))
        t = lb.scalar("t")
        lb.minimize(-t)
    _add_blocks(lb, _full_blocks(plant, N1, N2, X, Y, g), BLOCK_NAMES, t)
    p = lb.build()
    p.meta.update(
        form="full", perp=perp, gamma=gamma, n=n, N1=N1, N2=N2, zu=zu, yw=yw,
        plant=plant,
    )
    return p


def _hat_problem(
    zb: ZeroBlock, tb: ZeroBlock, plant: StateSpacePlant, extra=None,
    gamma: float | None = None,
) -> SdpProblem:
    """Null-vector form with blocks built from ``zb`` and ``tb``.

    ``min gamma`` when ``gamma`` is None, else ``max t`` with every block
    minus ``t I`` PSD. ``extra(g)`` may return further ``(block, name)``
    pairs.
    """
    S, f, Lam = zb.S, zb.f, zb.Lam
    T, gv, Om = tb.S, tb.f, tb.Lam
    h1 = S.T @ plant.b1 + plant.d11 * f
    h2 = T.T @ plant.c1 + plant.d11 * gv
    J = T.T @ S
    lb = LmiBuilder()
    if gamma is None:
        gam = lb.scalar("gamma")
        t = None
    else:
        gam = _const(float(gamma))
        t = lb.scalar("t")
    Xh = lb.symmetric("Xhat", zb.k)
    Yh = lb.symmetric("Yhat", tb.k)
    B1 = -bmat([
        [he(Lam.T @ Xh) - _times(gam, np.outer(f, f)), _const(_col(h1))],
        [_const(_col(h1).T), -gam],
    ])
    B2 = -bmat([
        [he(Om.T @ Yh) - _times(gam, np.outer(gv, gv)), _const(_col(h2))],
        [_const(_col(h2).T), -gam],
    ])
    blocks = [B1, B2]
    if zb.k + tb.k:
        Jx = _const(J) if J.size else Expr.zeros(tb.k, zb.k)
        blocks.append(bmat([[Xh, -Jx.T], [-Jx, Yh]]))
    else:
        blocks.append(Expr.zeros(0, 0))
    names = list(BLOCK_NAMES)
    if extra is not None:
        for B, name in extra(gam):
            blocks.append(B)
            names.append(name)
    _add_blocks(lb, blocks, names, t)
    lb.minimize(gam if t is None else -t)
    p = lb.build()
    p.meta.update(J=J, h1=h1, h2=h2, plant=plant, gamma=gamma)
    return p


def assemble_lmi2(
    plant: StateSpacePlant, zu: ZeroData | None = None, yw: ZeroData | None = None
) -> SdpProblem:
    """``min gamma`` in null-vector coordinates ``Xhat = S^T X S``, ``Yhat = T^T Y T``.

    Requires ``d12 d21 != 0``, so that ``S`` and ``T`` are square. Rows
    follow the order stable, unstable, axis.
    """
    if plant.d12 == 0.0 or plant.d21 == 0.0:
        raise DegenerateChannel("null-vector coordinates need d12 d21 != 0; use assemble_lmi_full")
    zu, yw = _channel_data(plant, zu, yw)
    p = _hat_problem(zu.all_finite, yw.all_finite, plant)
    p.meta.update(form="lmi2", zu=zu, yw=yw, n=plant.n)
    return p


def axis_bounds(zd: ZeroData, vec: np.ndarray, d11: float) -> list:
    """``|h_j| / |f_j|`` per axis pair from the real rows of the axis block.

    ``h = S0^T vec + d11 f0``; rows come in pairs ``(Re, -Im)``.
    """
    ax = zd.axis
    h = ax.S.T @ vec + d11 * ax.f
    out = []
    for j in range(0, ax.k, 2):
        fn = np.hypot(ax.f[j], ax.f[j + 1])
        out.append(float(np.hypot(h[j], h[j + 1]) / fn))
    return out


def _reduced_parts(plant, case, zu, yw, unstable_only) -> tuple:
    """Zero blocks, axis bounds and case of the reduced problem."""
    zu, yw = _channel_data(plant, zu, yw)
    if case is None:
        case = classify_case(plant, zu, yw)
    n = plant.n
    if case is Case.CASE2 or unstable_only:
        zb, tb = zu.plus, yw.plus
    else:
        zb = ZeroBlock.stack([zu.minus, zu.plus], n)
        tb = ZeroBlock.stack([yw.minus, yw.plus], n)
    bounds = []
    if case in (Case.CASE3, Case.CASE4):
        bounds = axis_bounds(zu, plant.b1, plant.d11) + axis_bounds(yw, plant.c1, plant.d11)
    return zb, tb, bounds, case, zu, yw


def _reduced_problem(plant, zb, tb, bounds, case, gamma) -> SdpProblem:
    def extra(gam: Expr) -> list:
        out = [(gam - c, f"axis{j}") for j, c in enumerate(bounds)]
        if case is Case.CASE4:
            d = _const(plant.d11)
            out.append((bmat([[gam, -d], [-d, gam]]), "feedthrough"))
        return out

    return _hat_problem(zb, tb, plant, extra, gamma)


def assemble_reduced(
    plant: StateSpacePlant,
    case: Case | None = None,
    zu: ZeroData | None = None,
    yw: ZeroData | None = None,
    gamma: float | None = None,
    unstable_only: bool = False,
) -> SdpProblem:
    """The case-specific reduced ``min gamma`` problem.

    * Case 1: null-vector form over all (unstable) zeros.
    * Case 2: unstable zeros only; blocks ``k1+1``, ``k2+1``, ``k1+k2``.
    * Case 3: non-axis zeros, plus one scalar block ``gamma - |h_j / f_j|``
      per axis pair.
    * Case 4: finite non-axis zeros (``S``, ``T`` rectangular), the axis
      scalars if any and the block ``[[gamma, -d11], [-d11, gamma]]``.

    ``unstable_only`` also drops the stable zeros in Cases 3 and 4, which
    leaves a problem that is strictly feasible on both sides. A fixed
    ``gamma`` gives the ``max t`` feasibility form.
    """
    zb, tb, bounds, case, zu, yw = _reduced_parts(plant, case, zu, yw, unstable_only)
    p = _reduced_problem(plant, zb, tb, bounds, case, gamma)
    p.meta.update(
        form="reduced", case=case, zu=zu, yw=yw, n=plant.n, axis_bounds=bounds,
        unstable_only=unstable_only,
    )
    return p


def rebalance(zb: ZeroBlock, X: np.ndarray) -> ZeroBlock:
    """Null-vector basis ``S L^{-T}`` in which the PD matrix ``X`` becomes a multiple of ``I``.

    ``L L^T`` is ``X`` divided by the geometric mean of its eigenvalues.
    The hat-coordinate blocks transform by congruence, so feasibility at
    every level is unchanged while the scaling follows ``X``.
    """
    X = (X + X.T) / 2
    # fix only the shape of X; the overall scale is left alone
    w = np.linalg.eigvalsh(X)
    L = np.linalg.cholesky(X / np.exp(np.mean(np.log(w))))
    Li = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return ZeroBlock(zb.S @ Li.T, Li @ zb.f, L.T @ zb.Lam @ Li.T)


def lmi_value(p: SdpProblem, opts: SdpOptions | None = None) -> tuple:
    """Solve ``p`` and return ``(optimal LMI-side objective, solution)``."""
    sol = sdp_solve(p, opts)
    return -sol.dual_objective, sol


def weak_duality_holds(sol: SdpSolution, tol: float = 1e-8) -> bool:
    """``b^T y <= <C, X> + tol (1 + |<C, X>|)`` on the returned pair."""
    return sol.dual_objective <= sol.primal_objective + tol * (1.0 + abs(sol.primal_objective))


# --------------------------------------------------------------------------
# gamma bisection


class Verdict(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass
class FeasibilityResult:
    """Outcome of one fixed-level test.

    ``margin`` is the smallest verified eigenvalue for a feasible verdict
    and the certified upper bound on ``t*`` for an infeasible one.
    """

    gamma: float
    verdict: Verdict
    margin: float
    status: SdpStatus
    iterations: int
    form: str = "full"


def _exact_blocks(p: SdpProblem, y: np.ndarray, jt: int) -> list:
    return [S + y[jt] * np.eye(S.shape[0]) for S in p.slack(y)]


def _verified_feasible(p: SdpProblem, y: np.ndarray, jt: int) -> float | None:
    """Smallest eigenvalue of the exact blocks if all clear the roundoff threshold."""
    if not np.all(np.isfinite(y)):
        return None
    worst = np.inf
    for B in _exact_blocks(p, y, jt):
        w = np.linalg.eigvalsh(B)
        if w[0] <= 1e-10 * max(1.0, abs(w).max()):
            return None
        worst = min(worst, float(w[0]))
    return worst


def _face_bound(p: SdpProblem, X: list, rel: float) -> tuple | None:
    """Project ``X`` onto ``A(X) = b`` inside the face spanned by its dominant eigenvectors.

    Eigenvectors with eigenvalue above ``rel * lambda_max`` span the face.
    Returns ``(<C, X'>, <|C|, |X'|>)`` when the projected ``X'`` is PSD and
    satisfies the constraints to roundoff, else None. The second entry sets
    the roundoff scale of the first.
    """
    bases, cores = [], []
    for Xk in X:
        w, V = np.linalg.eigh((Xk + Xk.T) / 2)
        top = max(float(w[-1]), 0.0) if w.size else 0.0
        keep = w > rel * top if rel > 0 else np.ones(w.shape, dtype=bool)
        U = V[:, keep]
        bases.append(U)
        cores.append(U.T @ Xk @ U)
    cols, xs = [], []
    for Ak, U, M in zip(p.A, bases, cores):
        cols.append(np.einsum("ai,jab,bk->jik", U, Ak, U).reshape(p.m, -1))
        xs.append(M.reshape(-1))
    Af = np.hstack(cols)
    x = np.concatenate(xs)
    r = p.b - Af @ x
    dx = np.linalg.lstsq(Af, r, rcond=None)[0]
    x = x + dx
    if np.linalg.norm(p.b - Af @ x) > 1e-12 * (1.0 + np.linalg.norm(p.b)):
        return None
    off, val, mag = 0, 0.0, 0.0
    for Ck, U in zip(p.C, bases):
        k = U.shape[1]
        M = x[off:off + k * k].reshape(k, k)
        off += k * k
        M = (M + M.T) / 2
        if k and np.linalg.eigvalsh(M)[0] < 0.0:
            return None
        Cu = U.T @ Ck @ U
        val += float(np.vdot(Cu, M))
        mag += float(np.vdot(np.abs(Cu), np.abs(M)))
    return (val, mag) if np.isfinite(val) else None


def _certified_bound(p: SdpProblem, X: list) -> tuple | None:
    """Weak-duality upper bound on the LMI-side optimum from a dual point.

    The dual point is first projected onto ``A(X) = b`` in the full space,
    then, when that breaks positive semidefiniteness, within the faces
    spanned by its dominant eigenvectors. Returns ``(bound, magnitude)``
    as :func:`_face_bound` does, or None.
    """
    if not all(np.all(np.isfinite(Xk)) for Xk in X):
        return None
    for rel in (0.0, 1e-10, 1e-8, 1e-6):
        val = _face_bound(p, X, rel)
        if val is not None:
            return val
    return None


def _decide(p: SdpProblem, gamma: float, form: str, opts: SdpOptions | None) -> tuple:
    """Run the ``max t`` problem ``p`` and return ``(FeasibilityResult, y or None)``."""
    jt = p.meta["remap"][p.meta["var_info"]["t"][1][0]]
    found: dict = {}

    def early(y, Z, X):
        lm = _verified_feasible(p, y, jt)
        if lm is not None:
            found["feasible"] = (lm, y.copy())
            return True
        cert = _certified_bound(p, X)
        if cert is not None and cert[0] < -1e-9 * max(cert[1], 1.0):
            found["infeasible"] = cert[0]
            return True
        return False

    base = opts or SdpOptions()
    o = SdpOptions(
        max_iter=base.max_iter, gap_tol=base.gap_tol, feas_tol=base.feas_tol,
        step_fraction=base.step_fraction, max_block=base.max_block, early_stop=early,
    )
    sol = sdp_solve(p, o)
    if "feasible" not in found and "infeasible" not in found:
        early(sol.y, sol.Z, sol.X)
    y = None
    if "feasible" in found:
        (margin, y), verdict = found["feasible"], Verdict.FEASIBLE
    elif "infeasible" in found:
        verdict, margin = Verdict.INFEASIBLE, found["infeasible"]
    else:
        verdict, margin = Verdict.UNKNOWN, float("nan")
    log.debug(
        "gamma=%.10g form=%s verdict=%s status=%s it=%d",
        gamma, form, verdict.value, sol.status.value, sol.iterations,
    )
    return FeasibilityResult(float(gamma), verdict, margin, sol.status, sol.iterations, form), y


def feasibility_test(
    plant: StateSpacePlant,
    gamma: float,
    perp: str = "svd",
    opts: SdpOptions | None = None,
    form: str = "full",
) -> FeasibilityResult:
    """Decide strict feasibility at level ``gamma``.

    ``form="full"`` tests the full LMI with ``perp`` perpendicular
    matrices. ``form="reduced"`` tests the problem over the unstable
    zeros (:func:`assemble_reduced` with ``unstable_only``), which stays
    well posed next to the optimal level where the full LMI needs
    unbounded Lyapunov variables.

    Feasible requires a point whose exact blocks are positive definite
    beyond roundoff. Infeasible requires a projected dual point proving
    ``t* < 0`` by weak duality. Anything else is ``UNKNOWN``.
    """
    if form == "full":
        p = assemble_lmi_full(plant, gamma, perp)
    elif form == "reduced":
        p = assemble_reduced(plant, gamma=gamma, unstable_only=True)
    else:
        raise ValueError(f"unknown form {form!r}")
    return _decide(p, gamma, form, opts)[0]


@dataclass
class BisectionResult:
    """Final bracket of :func:`bisect_gamma_detailed`.

    ``conclusive`` means ``hi - lo <= 2 tol``, so ``gamma`` is within
    ``tol`` of the optimal level whenever every verdict was correct.
    """

    gamma: float
    lo: float
    hi: float
    tol: float
    conclusive: bool
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "lo": self.lo,
            "hi": self.hi,
            "tol": self.tol,
            "conclusive": self.conclusive,
            "tests": len(self.history),
        }


def bisect_gamma_detailed(
    plant: StateSpacePlant,
    lo: float = 0.0,
    hi: float | None = None,
    tol: float = 1e-5,
    perp: str = "svd",
    opts: SdpOptions | None = None,
    max_hi: float = 1e8,
    form: str = "auto",
) -> BisectionResult:
    """Bisection on strict feasibility.

    ``form`` is ``"full"``, ``"reduced"`` or ``"auto"``; the last tests
    the full LMI first and falls back to the reduced problem when the
    full test is undecided, using only the reduced problem from then on
    since later levels lie closer to the optimum. At the switch the
    reduced basis is first rebalanced along the levels already verified
    feasible. Without ``hi`` the upper end is found by
    doubling from 1. When a midpoint is undecided the levels
    ``mid -+ tol/2`` are tried instead, which still closes the bracket to
    ``2 tol`` if both are decided.
    """
    history: list = []
    if form not in ("auto", "full", "reduced"):
        raise ValueError(f"unknown form {form!r}")
    forms = ["full", "reduced"] if form == "auto" else [form]
    if "reduced" in forms:
        zb, tb, bounds, case, _, _ = _reduced_parts(plant, None, None, None, True)
        coords = [zb, tb]

    def reduced(g: float) -> FeasibilityResult:
        p = _reduced_problem(plant, coords[0], coords[1], bounds, case, g)
        r, y = _decide(p, g, "reduced", opts)
        if y is not None:
            # rescale so the point just found sits at the identity
            for j, name in enumerate(("Xhat", "Yhat")):
                if coords[j].k:
                    coords[j] = rebalance(coords[j], variable_value(p, y, name))
        return r

    def test(g: float) -> Verdict:
        for fm in list(forms):
            if fm == "full":
                r = _decide(assemble_lmi_full(plant, g, perp), g, fm, opts)[0]
            else:
                r = reduced(g)
            history.append(r)
            if r.verdict is not Verdict.UNKNOWN:
                break
            if fm == "full" and len(forms) > 1:
                forms.remove("full")
                # walk the reduced basis down the verified levels so that
                # it is balanced by the time it reaches g
                done = sorted({h.gamma for h in history if h.verdict is Verdict.FEASIBLE}, reverse=True)
                for lvl in done:
                    history.append(reduced(lvl))
        return r.verdict

    if hi is None:
        hi = 1.0
        while True:
            v = test(hi)
            if v is Verdict.FEASIBLE:
                break
            if v is Verdict.INFEASIBLE:
                lo = max(lo, hi)
            hi *= 2.0
            if hi > max_hi:
                raise OracleInconclusive(f"no feasible level found up to {max_hi:g}")
    elif test(hi) is not Verdict.FEASIBLE:
        raise OracleInconclusive(f"upper level {hi:g} is not verified feasible")

    while hi - lo > 2 * tol:
        mid = 0.5 * (lo + hi)
        v = test(mid)
        if v is Verdict.FEASIBLE:
            hi = mid
        elif v is Verdict.INFEASIBLE:
            lo = mid
        else:
            moved = False
            up = mid + 0.5 * tol
            if up < hi and test(up) is Verdict.FEASIBLE:
                hi, moved = up, True
            down = mid - 0.5 * tol
            if down > lo and test(down) is Verdict.INFEASIBLE:
                lo, moved = down, True
            if not moved:
                break
    width = hi - lo
    return BisectionResult(0.5 * (lo + hi), lo, hi, tol, width <= 2 * tol * (1 + 1e-12), history)


def bisect_gamma(
    plant: StateSpacePlant,
    lo: float = 0.0,
    hi: float | None = None,
    tol: float = 1e-5,
    **kwargs,
) -> float:
    """Optimal level by bisection, within ``tol`` when conclusive.

    Raises
    ------
    OracleInconclusive
        If the bracket could not be closed to ``2 tol``.
    """
    res = bisect_gamma_detailed(plant, lo, hi, tol, **kwargs)
    if not res.conclusive:
        raise OracleInconclusive(f"bracket [{res.lo:.10g}, {res.hi:.10g}] wider than 2*tol")
    return res.gamma


# --------------------------------------------------------------------------
# facial reduction of the dual


@dataclass
class ReductionReport:
    """What :func:`facial_reduce_dual` removed.

    ``rules`` names the zero structures used: ``"stable_zero"`` (stable
    zeros force the matching dual rows to vanish), ``"axis_zero"`` (axis
    zeros empty the matching coupling rows) and ``"infinite_zero"`` (the
    infinite-zero chain leaves one direction per channel). ``patterns``
    lists, per block, the kept basis.
    """

    rules: list
    patterns: dict
    sizes_before: list
    sizes_after: list
    constraints_before: int
    constraints_after: int

    def to_dict(self) -> dict:
        return {
            "rules": list(self.rules),
            "patterns": dict(self.patterns),
            "sizes_before": list(self.sizes_before),
            "sizes_after": list(self.sizes_after),
            "constraints_before": self.constraints_before,
            "constraints_after": self.constraints_after,
        }


@dataclass(frozen=True)
class _Layout:
    """Index sets of one channel block in a dual problem."""

    k_minus: int
    k_plus: int
    k_axis: int
    r: int

    @property
    def k(self) -> int:
        return self.k_minus + self.k_plus + self.k_axis

    @property
    def minus(self) -> np.ndarray:
        return np.arange(self.k_minus)

    @property
    def plus(self) -> np.ndarray:
        return np.arange(self.k_minus, self.k_minus + self.k_plus)

    @property
    def axis(self) -> np.ndarray:
        return np.arange(self.k_minus + self.k_plus, self.k)

    @property
    def infinite(self) -> np.ndarray:
        return np.arange(self.k, self.k + self.r)

    @property
    def last(self) -> int:
        return self.k + self.r


def _layout(zd: ZeroData, form: str) -> _Layout:
    r = zd.relative_degree if form == "full" else 0
    return _Layout(zd.k_minus, zd.k_plus, zd.axis.k, r)


def _dual_layouts(dual: SdpProblem, structure) -> tuple:
    form = dual.meta.get("form")
    if form == "full" and dual.meta.get("perp") != "nullvec":
        raise StructureMismatch("zero patterns are stated in null-vector coordinates")
    if form not in ("full", "lmi2"):
        raise StructureMismatch(f"no zero pattern known for form {form!r}")
    if dual.meta.get("gamma") is not None:
        raise StructureMismatch("expected the min-gamma problem, not the fixed-level form")
    zu, yw = structure if structure is not None else (dual.meta["zu"], dual.meta["yw"])
    return form, zu, yw, _layout(zu, form), _layout(yw, form)


def _compress(
    C: list, A: list, b: np.ndarray, blocks: list, rtol: float = 1e-10, btol: float = 1e-9
) -> tuple:
    """Replace the equality constraints by an orthogonal basis of their row space.

    Singular values below ``rtol`` times the largest are treated as zero.
    A face found numerically is only accurate to about the certificate
    residual, so constraints that are dependent on the exact face show up
    as tiny independent rows; a looser ``rtol`` drops them.

    Raises
    ------
    StructureMismatch
        If the right-hand side leaves the row space, that is the restricted
        problem is infeasible.
    """
    m = b.shape[0]
    M = np.hstack([Ak.reshape(m, -1) for Ak in A]) if A else np.zeros((m, 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > rtol * (s[0] if s.size else 0.0))) if s.size else 0
    Ur = U[:, :r]
    resid = np.linalg.norm(b - Ur @ (Ur.T @ b))
    if resid > btol * (1.0 + np.linalg.norm(b)):
        raise StructureMismatch(f"restricted constraints are inconsistent (residual {resid:.2e})")
    A2 = [np.tensordot(Ur.T, Ak, axes=1) for Ak in A]
    return A2, Ur.T @ b, Ur


def facial_reduce_dual(dual: SdpProblem, structure: tuple | None = None) -> tuple:
    """Restrict the dual to the face implied by the zero structure.

    Parameters
    ----------
    dual : SdpProblem
        A ``min gamma`` problem from :func:`assemble_lmi2`, or from
        :func:`assemble_lmi_full` with ``perp="nullvec"``. Its standard
        side is the dual.
    structure : (ZeroData, ZeroData), optional
        Zero data of the ZU and YW channels; taken from ``dual.meta`` when
        omitted.

    Returns
    -------
    reduced : SdpProblem
        Each dual block ``X_k`` replaced by ``Q_k Xt_k Q_k^T`` and the
        constraints re-expressed on the remaining variables.
    report : ReductionReport

    Notes
    -----
    Stable zeros remove their rows from the channel blocks and from the
    coupling block. Axis zeros remove their rows from the coupling block.
    In the singular case the channel blocks keep only the first
    infinite-zero direction and the coupling block is restricted to the
    range of ``diag(S, T)``.
    """
    form, zu, yw, lz, ly = _dual_layouts(dual, structure)
    rules = []
    if lz.k_minus or ly.k_minus:
        rules.append("stable_zero")
    if lz.k_axis or ly.k_axis:
        rules.append("axis_zero")
    if lz.r > 1 or ly.r > 1 or (form == "full" and (lz.r or ly.r)):
        rules.append("infinite_zero")

    def channel_keep(L: _Layout) -> np.ndarray:
        keep = [L.plus, L.axis]
        if L.r:
            keep.append(L.infinite[:1])
        keep.append(np.array([L.last]))
        return np.concatenate(keep).astype(int)

    kz, kv = channel_keep(lz), channel_keep(ly)
    n = dual.meta["n"]
    if form == "full":
        S = zu.all_finite.S
        T = yw.all_finite.S
        QW = scipy.linalg.block_diag(S[:, lz.plus], T[:, ly.plus])
    else:
        QW = np.eye(2 * n)[:, np.concatenate([lz.plus, n + ly.plus]).astype(int)]
    Q = []
    patterns = {}
    for name, size in zip(dual.names, dual.blocks):
        if name == "Z":
            Q.append(np.eye(size)[:, kz])
            patterns["Z"] = _describe(lz, form)
        elif name == "V":
            Q.append(np.eye(size)[:, kv])
            patterns["V"] = _describe(ly, form)
        elif name == "W":
            Q.append(QW)
            patterns["W"] = (
                f"range of diag(S+, T+) ({lz.k_plus}+{ly.k_plus} columns)"
                if form == "full" else f"unstable rows only ({lz.k_plus}+{ly.k_plus})"
            )
        else:
            raise StructureMismatch(f"unexpected block {name!r}")
    C2 = [Qk.T @ Ck @ Qk for Qk, Ck in zip(Q, dual.C)]
    A2 = [np.einsum("ai,jab,bk->jik", Qk, Ak, Qk) for Qk, Ak in zip(Q, dual.A)]
    keep_blocks = [k for k, Qk in enumerate(Q) if Qk.shape[1] > 0]
    C2 = [C2[k] for k in keep_blocks]
    A2 = [A2[k] for k in keep_blocks]
    names = [dual.names[k] for k in keep_blocks]
    sizes = [Q[k].shape[1] for k in keep_blocks]
    A3, b3, Ur = _compress(C2, A2, dual.b, sizes)
    meta = dict(dual.meta)
    meta.update(form=f"{form}-reduced", Q=[Q[k] for k in keep_blocks], y_map=Ur)
    reduced = SdpProblem(sizes, C2, A3, b3, names, meta)
    report = ReductionReport(rules, patterns, list(dual.blocks), sizes, dual.m, reduced.m)
    return reduced, report


def _describe(L: _Layout, form: str) -> str:
    parts = [f"{L.k_plus} unstable"]
    if L.k_axis:
        parts.append(f"{L.k_axis} axis")
    if L.r:
        parts.append("1 infinite")
    parts.append("1 level")
    dropped = L.k_minus + max(L.r - 1, 0)
    return " + ".join(parts) + f" kept; {dropped} dropped"


def polish_dual(
    p: SdpProblem,
    opts: SdpOptions | None = None,
    max_steps: int = 6,
    null_tol: float = 1e-7,
) -> tuple:
    """Solve the standard side after numerical facial reduction.

    Degenerate problems leave the standard-side iterate with a residual
    whose square root shows up in every entry that feasibility forces to
    zero. Each step takes the multipliers of the strict-feasibility probe
    as a reducing direction ``y`` and restricts every block to the null
    space of ``-A^*(y)``; once the probe reports strict feasibility the
    restricted problem is solved and lifted back. No zero data is used.

    The face is only known to about the square root of the probe's
    residual, so constraints that become dependent on the exact face
    survive as rows of that size; they are dropped at a relative singular
    value of ``1e-5``, which leaves a feasibility residual of the same
    order in the lifted point.

    Returns
    -------
    sol : SdpSolution
        ``X`` lifted back to the blocks of ``p``; ``y`` the equivalent
        multipliers; ``Z`` the slack ``C - A^*(y)``.
    dims : list of list of int
        Block sizes after each step.
    strict : bool
        Whether the last restricted problem probed as strictly feasible.
    """
    q, dims, strict = p, [], False
    lift = [np.eye(k) for k in p.blocks]
    owner = list(range(len(p.blocks)))
    ymap = np.eye(p.m)
    for _ in range(max_steps):
        N = sum(q.blocks)
        _, ps = _probe_standard(q, opts, 10.0 * N)
        if ps.status is SdpStatus.OPTIMAL and float(ps.X[len(q.blocks)][0, 0]) / 10.0 > 1e-5:
            strict = True
            break
        y = ps.y[: q.m]
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) == 0:
            break
        D = [-Sk for Sk in q.adj(y)]
        scale = max(float(np.abs(np.linalg.eigvalsh(Dk)).max()) for Dk in D if Dk.size)
        U = []
        for Dk in D:
            w, V = np.linalg.eigh(Dk)
            U.append(V[:, w <= null_tol * scale])
        if all(Uk.shape[1] == Uk.shape[0] for Uk in U):
            break
        keep = [k for k, Uk in enumerate(U) if Uk.shape[1]]
        C2 = [U[k].T @ q.C[k] @ U[k] for k in keep]
        A2 = [np.einsum("ai,jab,bk->jik", U[k], q.A[k], U[k]) for k in keep]
        sizes = [U[k].shape[1] for k in keep]
        try:
            A3, b3, Ur = _compress(C2, A2, q.b, sizes, rtol=1e-5, btol=1e-5)
        except StructureMismatch:
            break
        q = SdpProblem(sizes, C2, A3, b3, [q.names[k] for k in keep], {})
        lift = [lift[k] @ U[k] for k in keep]
        owner = [owner[k] for k in keep]
        ymap = ymap @ Ur
        dims.append(sizes)
    cur = sdp_solve(q, opts)
    X = [np.zeros((k, k)) for k in p.blocks]
    for Lk, i, Xk in zip(lift, owner, cur.X):
        X[i] = X[i] + Lk @ Xk @ Lk.T
    y = ymap @ cur.y
    pobj = p.primal_objective(X)
    dobj = float(p.b @ y)
    pinf = float(np.linalg.norm(p.b - p.op(X)) / (1 + np.linalg.norm(p.b)))
    sol = SdpSolution(
        X, y, p.slack(y), pobj, dobj, abs(pobj - dobj), cur.status,
        cur.iterations, pinf, cur.dual_infeasibility,
    )
    return sol, dims, strict


def dual_pattern(dual: SdpProblem, sol: SdpSolution, structure: tuple | None = None) -> dict:
    """Norms of the dual blocks that the zero structure forces to vanish.

    Every entry is divided by the trace of its block, floored at ``1e-6``
    of the total trace. Keys:

    * ``Z_stable``, ``V_stable``: stable rows (and columns) of the channel
      blocks; ``W_stable``: stable rows of the coupling block
      (null-vector coordinates only).
    * ``Z_axis_cross``, ``V_axis_cross``: axis rows against the other zero
      rows; ``Z_axis_pair``, ``V_axis_pair``: largest deviation from the
      ``diag(z, z)`` form per axis pair; ``W_axis``: axis rows of the coupling
      block (``lmi2`` form).
    * ``Z_inf_cross``, ``V_inf_cross``: finite-zero rows against the
      infinite-zero rows; ``Z_inf_tail``, ``V_inf_tail``: entries of the
      infinite-zero block and of its last row beyond the first direction
      (``full`` form).
    """
    form, zu, yw, lz, ly = _dual_layouts(dual, structure)
    X = dict(zip(dual.names, sol.X))
    # a block the optimum empties has a trace of solver noise; ratios
    # against it say nothing, so traces are floored at 1e-6 of the total
    floor = max(1e-6 * sum(float(np.trace(Xk)) for Xk in sol.X), 1e-300)
    out = {}
    for name, L in (("Z", lz), ("V", ly)):
        M = X[name]
        tr = max(float(np.trace(M)), floor)
        if L.k_minus:
            mi = L.minus
            out[f"{name}_stable"] = float(np.linalg.norm(M[mi, :])) / tr
        if L.k_axis:
            ax = L.axis
            rest = np.setdiff1d(np.arange(L.k), ax)
            out[f"{name}_axis_cross"] = float(np.linalg.norm(M[np.ix_(ax, rest)])) / tr if rest.size else 0.0
            dev = 0.0
            for j in range(0, L.k_axis, 2):
                a, b = ax[j], ax[j + 1]
                dev = max(dev, abs(M[a, a] - M[b, b]), abs(M[a, b]))
            out[f"{name}_axis_pair"] = dev / tr
        if L.r:
            inf = L.infinite
            fin = np.arange(L.k)
            out[f"{name}_inf_cross"] = float(np.linalg.norm(M[np.ix_(fin, inf)])) / tr if fin.size else 0.0
            tail = inf[1:]
            if tail.size:
                sub = M[np.ix_(inf, inf)].copy()
                sub[0, 0] = 0.0
                val = np.linalg.norm(sub) ** 2 + np.linalg.norm(M[L.last, tail]) ** 2
                out[f"{name}_inf_tail"] = float(np.sqrt(val)) / tr
            else:
                out[f"{name}_inf_tail"] = 0.0
    if form == "lmi2":
        W = X["W"]
        n = dual.meta["n"]
        tr = max(float(np.trace(W)), floor)
        if lz.k_minus or ly.k_minus:
            rows = np.concatenate([lz.minus, n + ly.minus]).astype(int)
            out["W_stable"] = float(np.linalg.norm(W[rows, :])) / tr
        if lz.k_axis or ly.k_axis:
            rows = np.concatenate([lz.axis, n + ly.axis]).astype(int)
            out["W_axis"] = float(np.linalg.norm(W[rows, :])) / tr
    return out


def verify_dual_pattern(
    dual: SdpProblem,
    sol: SdpSolution,
    structure: tuple | None = None,
    tol: float = 1e-6,
) -> dict:
    """:func:`dual_pattern`, raising StructureMismatch above ``tol``."""
    pat = dual_pattern(dual, sol, structure)
    bad = {k: v for k, v in pat.items() if v > tol}
    if bad:
        raise StructureMismatch(
            "dual violates the zero pattern: "
            + ", ".join(f"{k}={v:.2e}" for k, v in sorted(bad.items()))
        )
    return pat


# --------------------------------------------------------------------------
# strict feasibility


class ProbeStatus(enum.Enum):
    STRICTLY_FEASIBLE = "StrictlyFeasible"
    REDUCING_DIRECTION = "ReducingDirectionFound"


@dataclass
class ProbeResult:
    """Outcome of :func:`strict_feasibility_probe`.

    ``margin`` is the optimal min-eigenvalue ``t*`` of the probe, relative to
    its normalization. For a strictly feasible problem ``point`` is the
    interior point (``y`` on the LMI side, the block list on the standard
    side); otherwise ``certificate`` holds the alternative: PSD blocks with
    ``<A_j, X> = 0`` and ``<C, X> <= 0`` for the LMI side, or ``y`` with
    ``-sum_j y_j A_j`` PSD and ``b^T y >= 0`` for the standard side.
    ``violation`` is the worst residual of that alternative.
    """

    status: ProbeStatus
    side: str
    margin: float
    point: object = None
    certificate: object = None
    violation: float = 0.0


def _probe_lmi(p: SdpProblem, opts: SdpOptions | None) -> tuple:
    m = p.m
    blocks = list(p.blocks) + [1]
    C = [Ck.copy() for Ck in p.C] + [np.ones((1, 1))]
    A = []
    for Ak, n in zip(p.A, p.blocks):
        t = np.eye(n)[None, :, :]
        A.append(np.concatenate([Ak, t], axis=0))
    cap = np.zeros((m + 1, 1, 1))
    cap[m, 0, 0] = 1.0
    A.append(cap)
    b = np.zeros(m + 1)
    b[m] = 1.0
    q = SdpProblem(blocks, C, A, b, list(p.names) + ["cap"])
    sol = sdp_solve(q, opts)
    return q, sol


def _probe_standard(p: SdpProblem, opts: SdpOptions | None, radius: float) -> tuple:
    m = p.m
    N = sum(p.blocks)
    blocks = list(p.blocks) + [1, 1]
    C = [np.zeros((n, n)) for n in p.blocks] + [-np.ones((1, 1)), np.zeros((1, 1))]
    A = []
    for Ak, n in zip(p.A, p.blocks):
        A.append(np.concatenate([Ak, np.eye(n)[None]], axis=0))
    tcol = np.zeros((m + 1, 1, 1))
    tcol[:m, 0, 0] = [sum(np.trace(Ak[j]) for Ak in p.A) for j in range(m)]
    tcol[m, 0, 0] = N
    A.append(tcol)
    scol = np.zeros((m + 1, 1, 1))
    scol[m, 0, 0] = 1.0
    A.append(scol)
    b = np.concatenate([p.b, [radius]])
    q = SdpProblem(blocks, C, A, b, list(p.names) + ["t", "s"])
    sol = sdp_solve(q, opts)
    return q, sol


def strict_feasibility_probe(
    p: SdpProblem,
    side: str = "standard",
    opts: SdpOptions | None = None,
    tau: float = 1e-5,
    radius: float | None = None,
) -> ProbeResult:
    """Decide which alternative of the strict-feasibility theorem holds.

    Parameters
    ----------
    p : SdpProblem
    side : {"standard", "lmi"}
        ``"standard"`` probes the dual blocks ``X`` (``A(X) = b``, ``X``
        positive definite); ``"lmi"`` probes ``C - sum_j y_j A_j``
        positive definite.
    tau : float
        Decision threshold on the normalized margin. Margins above ``tau``
        give StrictlyFeasible; margins below ``tau * 1e-2`` yield the
        certificate.
    radius : float, optional
        Trace bound of the standard-side probe, default ``10 * sum(blocks)``.

    Raises
    ------
    OracleInconclusive
        If the margin falls between the two thresholds or the solver fails.
    """
    if side == "lmi":
        q, sol = _probe_lmi(p, opts)
        if sol.status is not SdpStatus.OPTIMAL:
            raise OracleInconclusive(f"LMI-side probe ended with {sol.status.value}")
        t = float(sol.dual_objective)
        if t > tau:
            return ProbeResult(ProbeStatus.STRICTLY_FEASIBLE, side, t, point=sol.y[: p.m])
        if t < tau * 1e-2:
            cert = [Xk for Xk in sol.X[: len(p.blocks)]]
            scale = sum(float(np.trace(Xk)) for Xk in cert)
            viol = float(np.linalg.norm(p.op(cert))) / max(scale, 1e-300)
            cval = p.primal_objective(cert) / max(scale, 1e-300)
            viol = max(viol, max(cval, 0.0))
            return ProbeResult(ProbeStatus.REDUCING_DIRECTION, side, t, certificate=cert, violation=viol)
        raise OracleInconclusive(f"LMI-side probe margin {t:.3e} is ambiguous")
    if side != "standard":
        raise ValueError(f"unknown side {side!r}")
    N = sum(p.blocks)
    R = 10.0 * N if radius is None else radius
    q, sol = _probe_standard(p, opts, R)
    if sol.status is not SdpStatus.OPTIMAL:
        raise OracleInconclusive(f"standard-side probe ended with {sol.status.value}")
    t = float(sol.X[len(p.blocks)][0, 0])
    rel = t * N / R
    if rel > tau:
        point = [Xk + t * np.eye(Xk.shape[0]) for Xk in sol.X[: len(p.blocks)]]
        return ProbeResult(ProbeStatus.STRICTLY_FEASIBLE, side, rel, point=point)
    if rel < tau * 1e-2:
        y = sol.y[: p.m]
        D = [-Sk for Sk in p.adj(y)]
        ny = max(float(np.linalg.norm(y)), 1e-300)
        lmin = min((float(np.linalg.eigvalsh(Dk)[0]) for Dk in D if Dk.size), default=0.0)
        viol = max(-lmin, -float(p.b @ y), 0.0) / ny
        return ProbeResult(ProbeStatus.REDUCING_DIRECTION, side, rel, certificate=y, violation=viol)
    raise OracleInconclusive(f"standard-side probe margin {rel:.3e} is ambiguous")


# --------------------------------------------------------------------------
# matrix completion


def _psd_ok(M: np.ndarray, rel: float = 1e-9) -> bool:
    if M.size == 0:
        return True
    M = (M + M.T) / 2
    return float(np.linalg.eigvalsh(M)[0]) >= -rel * max(float(np.trace(M)), 1e-300)


def matrix_completion(U11, U31, U22, U32, U33) -> np.ndarray:
    """Off-diagonal block ``U21`` completing a PSD 3x3 block matrix.

    Given PSD ``[[U11, U31^T], [U31, U33]]`` and ``[[U22, U32^T], [U32, U33]]``,
    returns ``U21 = U32^T pinv(U33) U31`` so that
    ``[[U11, U21^T, U31^T], [U21, U22, U32^T], [U31, U32, U33]]`` is PSD.
    ``U31`` is ``q x k`` and ``U32`` is ``q x l`` for a ``q x q`` ``U33``.

    Raises
    ------
    HypothesisViolated
        If either bordered matrix is not PSD (``lambda_min >= -1e-9 trace``).
    """
    U11 = np.atleast_2d(np.asarray(U11, dtype=float))
    U22 = np.atleast_2d(np.asarray(U22, dtype=float))
    U33 = np.atleast_2d(np.asarray(U33, dtype=float))
    q = U33.shape[0]
    U31 = np.asarray(U31, dtype=float).reshape(q, U11.shape[0])
    U32 = np.asarray(U32, dtype=float).reshape(q, U22.shape[0])
    if not _psd_ok(np.block([[U11, U31.T], [U31, U33]])):
        raise HypothesisViolated("[[U11, U31^T], [U31, U33]] is not PSD")
    if not _psd_ok(np.block([[U22, U32.T], [U32, U33]])):
        raise HypothesisViolated("[[U22, U32^T], [U32, U33]] is not PSD")
    U33s = (U33 + U33.T) / 2
    w = np.linalg.eigvalsh(U33s)
    tau = max(U33.shape) * (abs(w).max() if w.size else 0.0) * np.finfo(float).eps * 1e3
    return U32.T @ _pinv(U33s, tau) @ U31


def _pinv(M: np.ndarray, tau: float) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    inv = np.where(np.abs(w) > tau, 1.0 / np.where(np.abs(w) > tau, w, 1.0), 0.0)
    return (V * inv) @ V.T


def completed_matrix(U11, U21, U31, U22, U32, U33) -> np.ndarray:
    """Assemble the symmetric 3x3 block matrix."""
    U11, U22, U33 = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (U11, U22, U33))
    q = U33.shape[0]
    U31 = np.asarray(U31, dtype=float).reshape(q, U11.shape[0])
    U32 = np.asarray(U32, dtype=float).reshape(q, U22.shape[0])
    U21 = np.asarray(U21, dtype=float).reshape(U22.shape[0], U11.shape[0])
    return np.block([[U11, U21.T, U31.T], [U21, U22, U32.T], [U31, U32, U33]])
