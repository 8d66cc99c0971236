"""SISO generalized plants, channel realizations and standing-assumption checks."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, SingularResolvent

_EPS = np.finfo(float).eps


class Channel(enum.Enum):
    """The four scalar channels of a generalized plant."""

    ZW = "zw"
    ZU = "zu"
    YW = "yw"
    YU = "yu"


class _Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"


#: Distinguished evaluation point ``s = infinity`` for :func:`transfer_eval`.
INF = _Infinity.INF


def _frozen(x, shape: tuple | None = None, name: str = "") -> np.ndarray:
    a = np.array(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Realization:
    """State-space data ``(A, b, c, d)`` of ``G(s) = c^T (sI - A)^{-1} b + d``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            if A.size == 0:
                A = A.reshape(0, 0)
            else:
                raise ValueError("A must be square")
        n = A.shape[0]
        object.__setattr__(self, "A", _frozen(A, (n, n), "A"))
        object.__setattr__(self, "b", _frozen(np.reshape(self.b, -1), (n,), "b"))
        object.__setattr__(self, "c", _frozen(np.reshape(self.c, -1), (n,), "c"))
        d = float(self.d)
        if not np.isfinite(d):
            raise ValueError("d must be finite")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def transposed(self) -> "Realization":
        """Dual system ``(A^T, c, b, d)``; it has the same transfer function."""
        return Realization(self.A.T, self.c, self.b, self.d)

    def rosenbrock(self) -> np.ndarray:
        """The matrix ``[[A, b], [c^T, d]]``."""
        n = self.n
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = self.A
        M[:n, n] = self.b
        M[n, :n] = self.c
        M[n, n] = self.d
        return M


@dataclass(frozen=True)
class StateSpacePlant:
    """SISO generalized plant with inputs ``(w, u)`` and outputs ``(z, y)``.

    ``dx = A x + b1 w + b2 u``, ``z = c1^T x + d11 w + d12 u``,
    ``y = c2^T x + d21 w``.
    """

    A: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d11: float
    d12: float
    d21: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, 0)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        n = A.shape[0]
        object.__setattr__(self, "A", _frozen(A, (n, n), "A"))
        for name in ("b1", "b2", "c1", "c2"):
            v = np.reshape(np.array(getattr(self, name), dtype=float), -1)
            object.__setattr__(self, name, _frozen(v, (n,), name))
        for name in ("d11", "d12", "d21"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def transformed(self, V: np.ndarray) -> "StateSpacePlant":
        """Apply the state similarity ``x -> V x``."""
        V = np.asarray(V, dtype=float)
        Vi = np.linalg.inv(V)
        return StateSpacePlant(
            V @ self.A @ Vi, V @ self.b1, V @ self.b2,
            Vi.T @ self.c1, Vi.T @ self.c2, self.d11, self.d12, self.d21,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "A": self.A.tolist(),
            "b1": self.b1.tolist(),
            "b2": self.b2.tolist(),
            "c1": self.c1.tolist(),
            "c2": self.c2.tolist(),
            "d11": self.d11,
            "d12": self.d12,
            "d21": self.d21,
        }


def channel_realization(plant: StateSpacePlant, ch: Channel) -> Realization:
    """Realization of one channel.

    The ``YW`` channel is returned in transposed form ``(A^T, c2, b1, d21)``,
    so that its left null vectors are the right null vectors of ``G_yw``.
    """
    if ch is Channel.ZW:
        return Realization(plant.A, plant.b1, plant.c1, plant.d11)
    if ch is Channel.ZU:
        return Realization(plant.A, plant.b2, plant.c1, plant.d12)
    if ch is Channel.YW:
        return Realization(plant.A.T, plant.c2, plant.b1, plant.d21)
    if ch is Channel.YU:
        return Realization(plant.A, plant.b2, plant.c2, 0.0)
    raise ValueError(f"unknown channel {ch!r}")


def transfer_eval(r: Realization, s) -> complex:
    """Evaluate ``c^T (sI - A)^{-1} b + d``.

    Parameters
    ----------
    r : Realization
    s : complex or INF
        Evaluation point. ``INF`` returns the feedthrough ``d`` exactly.

    Raises
    ------
    SingularResolvent
        If ``sI - A`` has condition number above ``eps**-0.5``.
    """
    if s is INF:
        return complex(r.d)
    n = r.n
    if n == 0:
        return complex(r.d)
    M = complex(s) * np.eye(n) - r.A
    if np.linalg.cond(M) > _EPS ** -0.5:
        raise SingularResolvent(f"sI - A is singular at s = {s}")
    x = np.linalg.solve(M, r.b.astype(complex))
    return complex(r.c @ x + r.d)


def rank_tol(M: np.ndarray) -> float:
    """Shared numerical-rank threshold ``max(shape) * ||M||_2 * eps * 1e3``."""
    if M.size == 0:
        return 0.0
    return max(M.shape) * np.linalg.norm(M, 2) * _EPS * 1e3


def _pbh_ok(A: np.ndarray, b: np.ndarray, tol: float | None) -> bool:
    A = np.asarray(A, dtype=float)
    b = np.reshape(np.asarray(b, dtype=float), (-1, 1))
    n = A.shape[0]
    if n == 0:
        return True
    scale = max(1.0, np.linalg.norm(A, 2))
    for lam in np.linalg.eigvals(A):
        if lam.real < -1e3 * _EPS * scale:
            continue
        M = np.hstack([A - lam * np.eye(n), b])
        sv = np.linalg.svd(M, compute_uv=False)
        thr = rank_tol(M) if tol is None else tol
        if np.sum(sv > thr) < n:
            return False
    return True


def check_stabilizable(A, b, tol: float | None = None) -> bool:
    """PBH test: ``rank[A - sI, b] = n`` at every eigenvalue with ``Re s >= 0``."""
    return _pbh_ok(A, b, tol)


def check_detectable(A, c, tol: float | None = None) -> bool:
    """Dual of :func:`check_stabilizable`, applied to ``(A^T, c)``."""
    return _pbh_ok(np.asarray(A, dtype=float).T, c, tol)


def is_identically_zero(r: Realization) -> bool:
    """True when ``d = 0`` and every Markov parameter ``c^T A^k b`` vanishes."""
    if r.d != 0.0:
        return False
    n = r.n
    v = r.b.copy()
    scale = (1.0 + np.linalg.norm(r.c)) * (1.0 + np.linalg.norm(r.b))
    normA = max(1.0, np.linalg.norm(r.A, 2)) if n else 1.0
    for k in range(n):
        if abs(r.c @ v) > 1e3 * _EPS * scale * normA ** k:
            return False
        v = r.A @ v
    return True


_FIELDS = ("n", "A", "b1", "b2", "c1", "c2", "d11", "d12", "d21")


def plant_from_dict(data: dict) -> StateSpacePlant:
    """Build a plant from the strict JSON schema.

    Raises
    ------
    ParseError
        On missing or extra keys, wrong types or inconsistent dimensions.
    """
    if not isinstance(data, dict):
        raise ParseError("plant description must be a JSON object")
    keys = set(data)
    missing = [k for k in _FIELDS if k not in keys]
    extra = sorted(keys - set(_FIELDS))
    if missing:
        raise ParseError(f"missing fields: {', '.join(missing)}")
    if extra:
        raise ParseError(f"unexpected fields: {', '.join(extra)}")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ParseError("n must be a nonnegative integer")

    def num(x, name):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError(f"{name} must be a number")
        return float(x)

    A = data["A"]
    if not isinstance(A, list) or len(A) != n or any(
        not isinstance(row, list) or len(row) != n for row in A
    ):
        raise ParseError(f"A must be a {n}x{n} nested list")
    A = [[num(x, "A") for x in row] for row in A]
    vecs = {}
    for name in ("b1", "b2", "c1", "c2"):
        v = data[name]
        if not isinstance(v, list) or len(v) != n:
            raise ParseError(f"{name} must be a list of length {n}")
        vecs[name] = [num(x, name) for x in v]
    try:
        return StateSpacePlant(
            np.array(A, dtype=float).reshape(n, n),
            vecs["b1"], vecs["b2"], vecs["c1"], vecs["c2"],
            num(data["d11"], "d11"), num(data["d12"], "d12"), num(data["d21"], "d21"),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_plant(path: str | Path) -> StateSpacePlant:
    """Read a plant JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return plant_from_dict(data)
