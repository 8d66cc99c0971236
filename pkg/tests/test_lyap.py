import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from hinflimit.errors import IllConditioned, NotHurwitz, NotPD, NotPSD, SpectraOverlap
from hinflimit.lyap import gramian, inv_sqrt, solve_lyapunov, solve_sylvester, sym_sqrt


def _quad_gramian(Lam, q):
    # int_0^inf e^{-Lam^T t} q q^T e^{-Lam t} dt
    k = len(q)

    def integrand(t):
        v = scipy.linalg.expm(-Lam.T * t) @ q
        return np.outer(v, v)

    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            val, _ = scipy.integrate.quad(lambda t: integrand(t)[i, j], 0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
            out[i, j] = out[j, i] = val
    return out


@st.composite
def _anti_stable(draw):
    k = draw(st.integers(1, 3))
    eig = draw(st.lists(st.floats(0.3, 3.0), min_size=k, max_size=k))
    # upper triangular with modest coupling keeps quadrature well behaved
    U = np.triu(np.array(draw(st.lists(st.floats(-0.5, 0.5), min_size=k * k, max_size=k * k))).reshape(k, k), 1)
    q = np.array(draw(st.lists(st.floats(-2, 2), min_size=k, max_size=k)))
    return np.diag(eig) + U, q


@given(_anti_stable())
def test_gramian_matches_quadrature(data):
    Lam, q = data
    X = gramian(Lam, q)
    Xq = _quad_gramian(Lam, q)
    assert np.allclose(X, Xq, atol=1e-6 * max(1.0, np.abs(Xq).max()))


def test_scalar_gramian():
    assert gramian(np.array([[4.0]]), np.array([1.0]))[0, 0] == pytest.approx(1 / 8)


def test_lyapunov_errors():
    with pytest.raises(NotHurwitz):
        solve_lyapunov([[1.0]], [[1.0]])
    with pytest.raises(IllConditioned):
        solve_lyapunov([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
    assert solve_lyapunov(np.zeros((0, 0)), np.zeros((0, 0))).shape == (0, 0)


def test_sylvester():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    B = np.array([[2.0]])
    C = np.array([[1.0], [4.0]])
    X = solve_sylvester(A, B, C)
    assert np.allclose(A @ X + X @ B, C)
    with pytest.raises(SpectraOverlap):
        solve_sylvester(np.array([[1.0]]), np.array([[-1.0]]), np.array([[1.0]]))


def test_square_roots():
    P = np.array([[4.0, 1.0], [1.0, 3.0]])
    R = sym_sqrt(P)
    assert np.allclose(R @ R, P) and np.allclose(R, R.T)
    Ri = inv_sqrt(P)
    assert np.allclose(Ri @ P @ Ri, np.eye(2))
    with pytest.raises(NotPSD):
        sym_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(NotPD):
        inv_sqrt(np.diag([1.0, 0.0]))
