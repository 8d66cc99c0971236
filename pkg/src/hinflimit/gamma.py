"""Closed-form infimal H-infinity level from invariant-zero data."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotDetectable,
    NotStabilizable,
    NullVectorDegenerate,
    SingularResolvent,
)
from .lyap import GramianSet, build_gramians, inv_sqrt, sym_sqrt
from .plant import (
    Channel,
    Realization,
    StateSpacePlant,
    channel_realization,
    check_detectable,
    check_stabilizable,
    is_identically_zero,
    transfer_eval,
)
from .zeros import ZeroData, analyze


class Case(enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    ZW_FALLBACK = "ZwFallback"


@dataclass
class GammaResult:
    """Optimal level and every candidate term of the max.

    Attributes
    ----------
    gamma_star : float
    case_id : Case
    hat_gamma : float
        Largest eigenvalue of ``E`` (0 when ``E`` is empty).
    imag_terms_zu, imag_terms_yw : list of (complex, float)
        Axis zeros and their terms ``|s^T b1 / f + d11|``, ``|t^T c1 / g + d11|``.
    feedthrough_term : float or None
        ``|d11|`` when ``d12 d21 = 0``.
    diagnostics : dict
    """

    gamma_star: float
    case_id: Case
    hat_gamma: float
    imag_terms_zu: list = field(default_factory=list)
    imag_terms_yw: list = field(default_factory=list)
    feedthrough_term: float | None = None
    diagnostics: dict = field(default_factory=dict)
    zu: ZeroData | None = None
    yw: ZeroData | None = None
    gramians: GramianSet | None = None

    def to_dict(self, components: bool = True) -> dict:
        out = {"gamma_star": self.gamma_star, "case": self.case_id.value}
        if components:
            out["hat_gamma"] = self.hat_gamma
            out["imag_terms_zu"] = [
                {"zero": [lam.real, lam.imag], "term": t} for lam, t in self.imag_terms_zu
            ]
            out["imag_terms_yw"] = [
                {"zero": [lam.real, lam.imag], "term": t} for lam, t in self.imag_terms_yw
            ]
            out["feedthrough_term"] = self.feedthrough_term
            out["diagnostics"] = self.diagnostics
        return out


def build_E(g: GramianSet) -> np.ndarray:
    """Symmetric matrix whose largest eigenvalue is the level set by unstable zeros.

    Block rows and columns have sizes ``(k1, k2, k1, k2)``::

        [ O            Fi J^T Gi    Fi H1h   O      ]
        [ Gi J Fi      O            O        Gi H2h ]
        [ H1h Fi       O            O        O      ]
        [ O            H2h Gi       O        O      ]

    with ``Fi = F+^{-1/2}``, ``Gi = G+^{-1/2}``, ``H1h = H1+^{1/2}``,
    ``H2h = H2+^{1/2}``. Empty sides drop out.
    """
    k1, k2 = g.k1, g.k2
    Fi = inv_sqrt(g.F_plus)
    Gi = inv_sqrt(g.G_plus)
    H1h = sym_sqrt(g.H1_plus)
    H2h = sym_sqrt(g.H2_plus)
    N = 2 * (k1 + k2)
    E = np.zeros((N, N))
    o1, o2, o3 = k1, k1 + k2, 2 * k1 + k2
    C = Gi @ g.J_plus @ Fi
    E[o1:o2, 0:o1] = C
    E[o2:o3, 0:o1] = H1h @ Fi
    E[o3:N, o1:o2] = H2h @ Gi
    E = E + E.T
    return E


def hat_gamma(E: np.ndarray) -> float:
    """``lambda_max(E)``, with the convention 0 for an empty matrix."""
    if E.shape[0] == 0:
        return 0.0
    return float(max(np.linalg.eigvalsh(E)[-1], 0.0))


def _imag_terms(pairs: list, vec: np.ndarray, d11: float, tol: float) -> list:
    out = []
    for pr in pairs:
        if abs(pr.f) < tol:
            raise NullVectorDegenerate(f"|f| = {abs(pr.f):.2e} at axis zero {pr.value}")
        out.append((pr.value, float(abs(pr.s @ vec / pr.f + d11))))
    return out


def imag_corrections(
    zu_pairs: list, yw_pairs: list, plant: StateSpacePlant, tol: float = 1e-10
) -> tuple:
    """Axis-zero terms ``|s^T b1 / f + d11|`` and ``|t^T c1 / g + d11|``.

    Raises
    ------
    NullVectorDegenerate
        If a feedthrough component of a null vector is below ``tol``.
    """
    zu = _imag_terms(zu_pairs, plant.b1, plant.d11, tol)
    yw = _imag_terms(yw_pairs, plant.c1, plant.d11, tol)
    return zu, yw


def _transfer_check(plant: StateSpacePlant, terms: list) -> float:
    """Largest mismatch between axis terms and ``|G_zw|`` where the latter is defined."""
    zw = channel_realization(plant, Channel.ZW)
    worst = 0.0
    for lam, t in terms:
        try:
            v = abs(transfer_eval(zw, lam))
        except SingularResolvent:
            continue
        worst = max(worst, abs(v - t) / max(1.0, v))
    return worst


def _is_zero(x: np.ndarray, scale: float) -> bool:
    return x.size == 0 or float(np.abs(x).max()) <= 1e-12 * max(1.0, scale)


def classify_case(plant: StateSpacePlant, zu: ZeroData, yw: ZeroData) -> Case:
    """Dispatch on feedthrough first, then axis zeros, then stable zeros."""
    if plant.d12 == 0.0 or plant.d21 == 0.0:
        return Case.CASE4
    if zu.imag_pairs or yw.imag_pairs:
        return Case.CASE3
    if zu.k_minus or yw.k_minus:
        return Case.CASE2
    return Case.CASE1


def gamma_star(
    plant: StateSpacePlant,
    tol_axis: float | None = None,
    grid: dict | None = None,
) -> GammaResult:
    """Infimal H-infinity level of the output-feedback problem for ``plant``.

    Parameters
    ----------
    plant : StateSpacePlant
    tol_axis : float, optional
        Imaginary-axis classification tolerance passed to zero analysis.
    grid : dict, optional
        Options for :func:`hinf_norm_grid` on the fallback path.

    Raises
    ------
    NotStabilizable, NotDetectable
        If ``(A, b2)`` is not stabilizable or ``(A, c2^T)`` not detectable.
    Unsupported
        For axis zeros at the origin or repeated axis zeros.
    """
    if not check_stabilizable(plant.A, plant.b2):
        raise NotStabilizable("(A, b2) is not stabilizable")
    if not check_detectable(plant.A, plant.c2):
        raise NotDetectable("(A, c2^T) is not detectable")
    zu_r = channel_realization(plant, Channel.ZU)
    yw_r = channel_realization(plant, Channel.YW)
    if is_identically_zero(zu_r) or is_identically_zero(yw_r):
        zw = channel_realization(plant, Channel.ZW)
        val = hinf_norm_grid(zw, **(grid or {}))
        return GammaResult(val, Case.ZW_FALLBACK, 0.0, diagnostics={"hinf_grid": val})
    zu = analyze(zu_r, tol_axis)
    yw = analyze(yw_r, tol_axis)
    case = classify_case(plant, zu, yw)
    singular = case is Case.CASE4

    g = build_gramians(zu, yw, plant)
    scale = 1.0 + abs(plant.d11) + np.linalg.norm(plant.b1) + np.linalg.norm(plant.c1)
    diag = {
        "k1": g.k1,
        "k2": g.k2,
        "null_residuals_zu": zu.residuals,
        "null_residuals_yw": yw.residuals,
    }
    if _is_zero(g.h1_plus, scale) and _is_zero(g.h2_plus, scale) and _is_zero(g.J_plus, 1.0):
        hg = 0.0
        diag["short_circuit"] = True
    else:
        E = build_E(g)
        hg = hat_gamma(E)
        diag["short_circuit"] = False
        if g.k1:
            diag["cond_F"] = float(np.linalg.cond(g.F_plus))
        if g.k2:
            diag["cond_G"] = float(np.linalg.cond(g.G_plus))
    tz, ty = imag_corrections(zu.imag_pairs, yw.imag_pairs, plant)
    if tz or ty:
        diag["imag_transfer_mismatch"] = _transfer_check(plant, tz + ty)
    feed = abs(plant.d11) if singular else None
    cands = [hg] + [t for _, t in tz] + [t for _, t in ty]
    if feed is not None:
        cands.append(feed)
    return GammaResult(
        float(max(cands)), case, hg, tz, ty, feed, diag, zu=zu, yw=yw, gramians=g
    )


def sensitivity_plant(A, b, c) -> StateSpacePlant:
    """Generalized plant whose closed loop is the sensitivity ``1 / (1 + P K)``.

    ``P(s) = c^T (sI - A)^{-1} b``; ``z = y = c^T x + w`` and ``u`` enters via ``b``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    return StateSpacePlant(A, np.zeros(n), b, c, c, 1.0, 0.0, 1.0)


def sensitivity_limit(A, b, c) -> float:
    """``max(sqrt(1 + sigma_max^2(G+^{-1/2} J+ F+^{-1/2})), 1)`` for ``P = (A, b, c)``.

    Unstable zeros of ``P`` enter through ``F+`` and unstable poles through
    ``G+``; with neither present the value is 1.
    """
    plant = sensitivity_plant(A, b, c)
    res = gamma_star(plant)
    g = res.gramians
    if g is None or g.k1 == 0 or g.k2 == 0:
        sig = 0.0
    else:
        C = inv_sqrt(g.G_plus) @ g.J_plus @ inv_sqrt(g.F_plus)
        sig = float(np.linalg.norm(C, 2))
    return max(float(np.sqrt(1.0 + sig ** 2)), 1.0)


def hinf_norm_grid(
    r: Realization,
    n_points: int = 400,
    span: tuple = (1e-4, 1e4),
    refine_tol: float = 1e-10,
) -> float:
    """Peak of ``|G(jw)|`` over a log-spaced grid, refined by golden-section search.

    The grid covers ``span * max(1, ||A||_2)`` plus ``w = 0``. If ``A`` is
    not Hurwitz the result is the supremum over the imaginary axis and a
    warning is issued. Grid points on poles are skipped.
    """
    n = r.n
    if n == 0 or not np.any(r.b) or not np.any(r.c):
        return abs(r.d)
    ev = np.linalg.eigvals(r.A)
    if np.any(ev.real >= 0):
        warnings.warn("A is not Hurwitz; returning the supremum over the grid", RuntimeWarning)
    scale = max(1.0, float(np.linalg.norm(r.A, 2)))
    w = np.concatenate([[0.0], np.logspace(np.log10(span[0] * scale), np.log10(span[1] * scale), n_points)])
    # include eigenvalue frequencies of lightly damped modes
    w = np.unique(np.concatenate([w, np.abs(ev.imag[ev.imag > 0])]))

    def mag(x: float) -> float:
        try:
            return abs(transfer_eval(r, 1j * x))
        except SingularResolvent:
            return -np.inf

    vals = np.array([mag(x) for x in w])
    best = float(np.max(np.append(vals[np.isfinite(vals)], abs(r.d))))
    idx = np.argsort(-vals)[:3]
    invphi = (np.sqrt(5) - 1) / 2
    for i in idx:
        lo = w[max(i - 1, 0)]
        hi = w[min(i + 1, len(w) - 1)]
        a, b = lo, hi
        c1 = b - invphi * (b - a)
        c2 = a + invphi * (b - a)
        f1, f2 = mag(c1), mag(c2)
        while b - a > refine_tol * max(1.0, b):
            if f1 > f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - invphi * (b - a)
                f1 = mag(c1)
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + invphi * (b - a)
                f2 = mag(c2)
        best = max(best, f1, f2)
    return float(best)
