"""Seeded random plants with a prescribed case.

The zeros of the ``u -> z`` channel are ``eig(A - b2 c1^T / d12)`` when
``d12 != 0`` and those of ``w -> y`` are ``eig(A^T - c2 b1^T / d21)``
when ``d21 != 0``, so ``c1`` and ``b1`` are chosen by pole placement to put
the zeros where the target case needs them.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import place_poles

from .gamma import Case
from .plant import StateSpacePlant

FEEDTHROUGH = (0.0, 0.5, -0.5, 1.0, -1.0)
CASE_ORDER = (Case.CASE1, Case.CASE2, Case.CASE3, Case.CASE4)
MIN_GAP = 0.3


def _state_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """Scaled Gaussian shifted so that between 1 and ``n - 1`` modes are unstable."""
    while True:
        G = rng.standard_normal((n, n)) / np.sqrt(n)
        re = np.sort(np.linalg.eigvals(G).real)
        k = int(rng.integers(1, n)) if n > 1 else 1
        # shift halfway between the k-th largest real part and the next one
        hi = re[n - k]
        lo = re[n - k - 1] if n - k - 1 >= 0 else hi - 1.0
        if hi - lo < 0.2:
            continue
        A = G - 0.5 * (hi + lo) * np.eye(n)
        if np.min(np.abs(np.linalg.eigvals(A).real)) > 0.05:
            return A


def _zero_set(rng: np.random.Generator, n: int, signs: list) -> np.ndarray:
    """``n`` zeros; ``signs[i]`` is +1, -1 or 0 (axis) per slot.

    Complex pairs take two slots with the sign of the first.
    """
    out: list = []
    i = 0
    while i < n:
        s = signs[i]
        if s == 0:
            w = rng.uniform(0.5, 2.0)
            out += [1j * w, -1j * w]
            i += 2
            continue
        re = s * rng.uniform(MIN_GAP, 3.0)
        if i + 1 < n and signs[i + 1] == s and rng.random() < 0.4:
            im = rng.uniform(MIN_GAP, 2.0)
            out += [re + 1j * im, re - 1j * im]
            i += 2
        else:
            out.append(complex(re))
            i += 1
    return np.array(out)


def _separated(z: np.ndarray) -> bool:
    """Unstable zeros pairwise ``MIN_GAP`` apart; all zeros at least 0.1 apart."""
    for a in range(len(z)):
        d = np.abs(z[a + 1:] - z[a])
        if np.any(d < 0.1):
            return False
        if z[a].real > 0 and np.any(d[z[a + 1:].real > 0] < MIN_GAP):
            return False
    return True


def _zero_sets(rng: np.random.Generator, sizes: list, signs: list) -> list:
    """Zero sets for both channels, redrawn until :func:`_separated` holds."""
    while True:
        sets = [
            _zero_set(rng, k, s) if k else np.zeros(0, complex) for k, s in zip(sizes, signs)
        ]
        if _separated(np.concatenate(sets)):
            return sets


def _signs(rng: np.random.Generator, n: int, case: Case) -> list:
    if case is Case.CASE1:
        return [1] * n
    if case is Case.CASE3:
        rest = [int(s) for s in rng.choice([-1, 1], size=n - 2)]
        return [0, 0] + rest
    signs = [int(s) for s in rng.choice([-1, 1], size=n)]
    if case is Case.CASE2 and -1 not in signs:
        signs[int(rng.integers(n))] = -1
    return signs


def _place(A: np.ndarray, b: np.ndarray, zeros: np.ndarray) -> np.ndarray:
    """Gain ``k`` with ``eig(A - b k^T) = zeros``."""
    return place_poles(A, b[:, None], zeros).gain_matrix[0]


def _strictly_proper(A: np.ndarray, b: np.ndarray, zeros: np.ndarray) -> np.ndarray:
    """Unit ``c`` with ``c^T (sI - A)^{-1} b`` vanishing at ``zeros`` (``n - 1`` of them).

    ``c^T adj(sI - A) b`` is linear in ``c``, so matching the monic
    numerator at ``n`` real sample points fixes ``c`` up to scale.
    """
    n = A.shape[0]
    pts = np.max(np.abs(np.linalg.eigvals(A))) + 1.0 + np.arange(n)
    den = np.poly(A)
    num = np.poly(zeros).real
    M = np.array([np.linalg.solve(s * np.eye(n) - A, b) * np.polyval(den, s) for s in pts])
    c = np.linalg.solve(M, np.polyval(num, pts))
    return c / np.linalg.norm(c)


def _nonzero_d(rng: np.random.Generator) -> float:
    return float(rng.choice([0.5, -0.5, 1.0, -1.0]))


def random_plant(rng: np.random.Generator, n: int, case: Case) -> StateSpacePlant:
    """A stabilizable, detectable plant of order ``n`` in the requested case.

    Case 3 puts one pair ``+-j w`` among the ``u -> z`` zeros and needs
    ``n >= 2``. Case 4 sets ``d12``, ``d21`` or both to zero, and a channel
    with zero feedthrough gets ``n - 1`` placed zeros. Unstable
    zeros of the two channels are kept ``MIN_GAP`` apart and away from the
    axis, which keeps the optimal level moderate.
    """
    if case not in CASE_ORDER:
        raise ValueError(f"no generator for {case}")
    if case is Case.CASE3 and n < 2:
        raise ValueError("Case 3 needs n >= 2")
    A = _state_matrix(rng, n)
    b2 = rng.standard_normal(n)
    c2 = rng.standard_normal(n)
    d11 = float(rng.choice(FEEDTHROUGH))
    if case is Case.CASE4:
        which = int(rng.integers(3))
        d12 = 0.0 if which in (0, 2) else _nonzero_d(rng)
        d21 = 0.0 if which in (1, 2) else _nonzero_d(rng)
    else:
        d12, d21 = _nonzero_d(rng), _nonzero_d(rng)
    s_zu = _signs(rng, n, case)
    if case is Case.CASE3:
        s_yw = [int(s) for s in rng.choice([-1, 1], size=n)]
    else:
        s_yw = _signs(rng, n, case)
    zu, yw = _zero_sets(rng, [n if d12 else n - 1, n if d21 else n - 1], [s_zu, s_yw])
    # only the products b2 c1^T and c2 b1^T fix the zeros, so the gain
    # goes into b2 and c2, leaving |c1| = |d12| and |b1| = |d21|
    if d12 != 0.0:
        k = _place(A, b2, zu)
        s1 = float(np.linalg.norm(k))
        b2, c1 = b2 * s1, d12 * k / s1
    else:
        c1 = _strictly_proper(A, b2, zu)
    if d21 != 0.0:
        k = _place(A.T, c2, yw)
        s2 = float(np.linalg.norm(k))
        c2, b1 = c2 * s2, d21 * k / s2
    else:
        b1 = _strictly_proper(A.T, c2, yw)
    return StateSpacePlant(A, b1, b2, c1, c2, d11, d12, d21)


def random_suite(
    seed: int, count: int, n_range: tuple = (2, 6), cases: tuple = CASE_ORDER
) -> list:
    """``count`` plants as ``(case, plant)`` pairs, cycling through ``cases``.

    Orders are drawn uniformly from ``n_range`` (inclusive); Case 3 draws
    from ``max(2, lo)`` upwards.
    """
    rng = np.random.default_rng(seed)
    lo, hi = n_range
    out = []
    for i in range(count):
        case = cases[i % len(cases)]
        n = int(rng.integers(max(lo, 2) if case is Case.CASE3 else lo, hi + 1))
        out.append((case, random_plant(rng, n, case)))
    return out
