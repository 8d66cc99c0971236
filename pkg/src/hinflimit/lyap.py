"""Lyapunov and Sylvester solves, Gramians and symmetric square roots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IllConditioned, NotHurwitz, NotPD, NotPSD, SpectraOverlap
from .plant import StateSpacePlant
from .zeros import ZeroData


def _tol_axis(M: np.ndarray) -> float:
    return 1e-8 * max(1.0, float(np.linalg.norm(M, 2)) if M.size else 0.0)


def solve_lyapunov(M, Q) -> np.ndarray:
    """Solve ``M^T X + X M = -Q`` for Hurwitz ``M``.

    Parameters
    ----------
    M : (k, k) array_like
        All eigenvalues must lie in the open left half-plane.
    Q : (k, k) array_like
        Symmetric right-hand side.

    Returns
    -------
    X : ndarray
        Symmetric solution.

    Raises
    ------
    NotHurwitz
        If some eigenvalue has real part above the axis tolerance.
    IllConditioned
        If some eigenvalue lies within the axis tolerance of the imaginary axis.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    k = M.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    tau = _tol_axis(M)
    re = np.linalg.eigvals(M).real
    if np.any(re > tau):
        raise NotHurwitz(f"eigenvalue with real part {re.max():.3e}")
    if np.any(re >= -tau):
        raise IllConditioned(f"eigenvalue within {tau:.1e} of the imaginary axis")
    Qs = (Q + Q.T) / 2
    X = scipy.linalg.solve_continuous_lyapunov(M.T, -Qs)
    X = (X + X.T) / 2
    res = np.linalg.norm(M.T @ X + X @ M + Qs)
    if res > 1e-10 * max(np.linalg.norm(Qs), 1e-300) and res > 1e-14:
        raise IllConditioned(f"Lyapunov residual {res:.2e}")
    return X


def solve_sylvester(A, B, C) -> np.ndarray:
    """Solve ``A X + X B = C``.

    Raises
    ------
    SpectraOverlap
        If ``A`` and ``-B`` share an eigenvalue (within ``1e-10`` relative).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    ea = np.linalg.eigvals(A)
    eb = np.linalg.eigvals(B)
    scale = max(1.0, np.abs(ea).max(), np.abs(eb).max())
    gap = np.abs(ea[:, None] + eb[None, :]).min()
    if gap <= 1e-10 * scale:
        raise SpectraOverlap(f"spectra of A and -B overlap (gap {gap:.1e})")
    X = scipy.linalg.solve_sylvester(A, B, C)
    res = np.linalg.norm(A @ X + X @ B - C)
    if res > 1e-10 * max(np.linalg.norm(C), 1e-300) and res > 1e-14:
        raise IllConditioned(f"Sylvester residual {res:.2e}")
    return X


def _tau_pd(P: np.ndarray) -> float:
    return 1e-10 * float(np.trace(P)) / P.shape[0]


def sym_sqrt(P) -> np.ndarray:
    """Symmetric PSD square root by eigendecomposition.

    Raises
    ------
    NotPSD
        If the smallest eigenvalue is below ``-tau_pd``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] == 0:
        return np.zeros((0, 0))
    P = (P + P.T) / 2
    w, V = np.linalg.eigh(P)
    tau = max(_tau_pd(P), 0.0)
    if w.min() < -max(tau, 1e-14 * max(1.0, abs(w).max())):
        raise NotPSD(f"smallest eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return (R + R.T) / 2


def inv_sqrt(P) -> np.ndarray:
    """Inverse symmetric square root of a PD matrix.

    Raises
    ------
    NotPD
        If the smallest eigenvalue does not exceed ``tau_pd = 1e-10 trace/dim``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] == 0:
        return np.zeros((0, 0))
    P = (P + P.T) / 2
    w, V = np.linalg.eigh(P)
    tau = _tau_pd(P)
    if tau <= 0 or w.min() <= tau:
        raise NotPD(f"smallest eigenvalue {w.min():.3e} below {tau:.1e}")
    R = (V / np.sqrt(w)) @ V.T
    return (R + R.T) / 2


@dataclass(frozen=True)
class GramianSet:
    """Gramians of the unstable zero data and the coupling terms.

    ``F_plus`` and ``H1_plus`` solve ``Lam+^T X + X Lam+ = q q^T`` with
    ``q = f+`` and ``q = h1+`` respectively; ``G_plus`` and ``H2_plus`` are the
    analogues for ``Omega+``.
    """

    F_plus: np.ndarray
    G_plus: np.ndarray
    H1_plus: np.ndarray
    H2_plus: np.ndarray
    J_plus: np.ndarray
    h1_plus: np.ndarray
    h2_plus: np.ndarray

    @property
    def k1(self) -> int:
        return self.F_plus.shape[0]

    @property
    def k2(self) -> int:
        return self.G_plus.shape[0]


def gramian(Lam: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve ``Lam^T X + X Lam = q q^T`` for ``Lam`` with spectrum in ``Re > 0``."""
    q = np.asarray(q, dtype=float)
    return solve_lyapunov(-np.asarray(Lam, dtype=float), np.outer(q, q))


def build_gramians(zu: ZeroData, yw: ZeroData, plant: StateSpacePlant) -> GramianSet:
    """Gramians ``F+, G+, H1+, H2+`` and ``J+ = T+^T S+``, ``h1+``, ``h2+``.

    ``zu`` holds the left null vectors of ``G_zu`` and ``yw`` those of the
    transposed ``G_yw`` realization.
    """
    S, f, Lam = zu.plus.S, zu.plus.f, zu.plus.Lam
    T, g, Om = yw.plus.S, yw.plus.f, yw.plus.Lam
    h1 = S.T @ plant.b1 + plant.d11 * f
    h2 = T.T @ plant.c1 + plant.d11 * g
    return GramianSet(
        F_plus=gramian(Lam, f),
        G_plus=gramian(Om, g),
        H1_plus=gramian(Lam, h1),
        H2_plus=gramian(Om, h2),
        J_plus=T.T @ S,
        h1_plus=h1,
        h2_plus=h2,
    )
