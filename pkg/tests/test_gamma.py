import dataclasses

import numpy as np
import pytest
import scipy.signal
from scipy.sparse.csgraph import connected_components
from hypothesis import given
from hypothesis import strategies as st

from conftest import tf_plant
from hinflimit.errors import NotDetectable, NotStabilizable
from hinflimit.gamma import (
    Case,
    build_E,
    gamma_star,
    hat_gamma,
    hinf_norm_grid,
    sensitivity_limit,
)
from hinflimit.lyap import build_gramians
from hinflimit.plant import Channel, Realization, StateSpacePlant, channel_realization, transfer_eval
from hinflimit.randplants import random_suite


@pytest.mark.parametrize("z, p", [(1.0, 2.0), (2.0, 4.0), (0.5, 3.0), (3.0, 1.0)])
def test_single_zero_pole(z, p):
    res = gamma_star(tf_plant([z], [p, -1.0]))
    assert res.gamma_star == pytest.approx(abs((p + z) / (p - z)), rel=1e-9)
    assert res.case_id is Case.CASE4


def test_sensitivity_limit():
    A, B, C, _ = scipy.signal.tf2ss(np.poly([1.0]), np.poly([3.0, -1.0]))
    assert sensitivity_limit(A, B[:, 0], C[0]) == pytest.approx(2.0, rel=1e-9)
    A, B, C, _ = scipy.signal.tf2ss(np.poly([-1.0]), np.poly([-2.0, -3.0]))
    assert sensitivity_limit(A, B[:, 0], C[0]) == 1.0


def test_two_zeros_one_pole():
    z1, z2, p = 1.0, 2.0, 4.0
    res = gamma_star(tf_plant([z1, z2], [p, -1.0, -3.0]))
    expect = abs(p + z1) * abs(p + z2) / (abs(p - z1) * abs(p - z2))
    assert res.gamma_star == pytest.approx(expect, rel=1e-8)


def test_empty_and_antidiagonal_E():
    assert hat_gamma(np.zeros((0, 0))) == 0.0
    assert hat_gamma(np.zeros((3, 3))) == 0.0
    assert hat_gamma(np.array([[0.0, -2.5], [-2.5, 0.0]])) == pytest.approx(2.5)


def test_E_structure():
    res = gamma_star(tf_plant([1.0, 2.0], [4.0, -1.0, -3.0]))
    E = build_E(res.gramians)
    k1, k2 = res.gramians.k1, res.gramians.k2
    assert E.shape == (2 * (k1 + k2),) * 2
    assert np.array_equal(E, E.T)
    assert not E[:k1, :k1].any() and not E[k1:k1 + k2, k1:k1 + k2].any()
    assert np.linalg.eigvalsh(E)[-1] >= 0


def test_all_stable_zeros():
    # d12 = d21 = 1 with zeros of both channels in the left half-plane
    A = np.diag([1.0, -2.0])
    p = StateSpacePlant(A, [1.0, 1.0], [1.0, 1.0], [4.0, 0.0], [4.0, 0.0], 0.7, 1.0, 1.0)
    res = gamma_star(p)
    assert res.case_id in (Case.CASE1, Case.CASE2)
    assert res.gamma_star == 0.0
    assert res.diagnostics["short_circuit"]


def test_case4_feedthrough_only():
    # stable minimum-phase sensitivity: only |d11| = 1 remains
    res = gamma_star(tf_plant([-1.0], [-2.0, -3.0]))
    assert res.case_id is Case.CASE4
    assert res.hat_gamma == 0.0 and res.gamma_star == 1.0 == res.feedthrough_term


def _axis_plant():
    # G_zu = (s^2 + 1)(s + 3) / ((s + 1)(s + 2)(s + 4)), zero at s = j
    A, B, C, D = scipy.signal.tf2ss(np.poly([1j, -1j, -3.0]).real, np.poly([-1.0, -2.0, -4.0]))
    return StateSpacePlant(A, [0.5, -1.0, 2.0], B[:, 0], C[0], [1.0, 0.3, -0.2], 0.4, float(D[0, 0]), 1.0)


def test_axis_term_equals_transfer():
    plant = _axis_plant()
    res = gamma_star(plant)
    assert res.case_id is Case.CASE3
    (lam, term), = res.imag_terms_zu
    assert lam == pytest.approx(1j)
    gzw = abs(transfer_eval(channel_realization(plant, Channel.ZW), 1j))
    assert term == pytest.approx(gzw, abs=1e-9)
    assert res.gamma_star >= gzw
    assert res.diagnostics["imag_transfer_mismatch"] < 1e-9


def test_stabilizability_errors():
    A = np.diag([1.0, -1.0])
    with pytest.raises(NotStabilizable):
        gamma_star(StateSpacePlant(A, [1, 1], [0, 1], [1, 1], [1, 0], 0, 1, 1))
    with pytest.raises(NotDetectable):
        gamma_star(StateSpacePlant(A, [1, 1], [1, 0], [1, 1], [0, 1], 0, 1, 1))


def test_zw_fallback():
    # c1 = 0 and d12 = 0: G_zu vanishes, gamma* is the norm of G_zw = d11 + 0
    A = np.array([[-1.0]])
    p = StateSpacePlant(A, [1.0], [1.0], [0.0], [1.0], 0.0, 0.0, 1.0)
    res = gamma_star(p)
    assert res.case_id is Case.ZW_FALLBACK and res.gamma_star == 0.0


def test_hinf_grid():
    assert hinf_norm_grid(Realization(np.zeros((0, 0)), [], [], -2.0)) == 2.0
    assert hinf_norm_grid(Realization([[-1.0]], [1.0], [1.0], 0.0)) == pytest.approx(1.0, abs=1e-9)
    # (s - 1)/(s + 1) is all-pass
    assert hinf_norm_grid(Realization([[-1.0]], [1.0], [-2.0], 1.0)) == pytest.approx(1.0, abs=1e-9)
    # lightly damped peak at w = 1: 1/(s^2 + 0.02 s + 1) peaks near 50
    A, B, C, D = scipy.signal.tf2ss([1.0], [1.0, 0.02, 1.0])
    peak = 1 / (0.02 * np.sqrt(1 - 0.0001))
    assert hinf_norm_grid(Realization(A, B[:, 0], C[0], 0.0)) == pytest.approx(peak, rel=1e-6)


def test_components_dict():
    d = gamma_star(tf_plant([2.0], [4.0, -1.0])).to_dict()
    assert set(d) >= {"gamma_star", "case", "hat_gamma", "imag_terms_zu", "feedthrough_term"}
    assert set(gamma_star(tf_plant([2.0], [4.0, -1.0])).to_dict(components=False)) == {"gamma_star", "case"}


SUITE = random_suite(3, 16, (2, 4))


@given(st.sampled_from(SUITE), st.integers(0, 2 ** 32 - 1))
def test_similarity_invariance(item, seed):
    _, plant = item
    rng = np.random.default_rng(seed)
    n = plant.n
    V = np.eye(n) + 0.5 * rng.standard_normal((n, n))
    if np.linalg.cond(V) > 50:
        return
    a = gamma_star(plant).gamma_star
    b = gamma_star(plant.transformed(V)).gamma_star
    assert b == pytest.approx(a, rel=1e-7, abs=1e-9)


def _block_scaling(Lam, scales):
    # one scalar per connected block of Lam commutes with Lam
    k = Lam.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    _, label = connected_components(np.abs(Lam) + np.abs(Lam.T) > 0, directed=False)
    return np.diag([scales[i % len(scales)] for i in label])


def _rescaled(zd, D):
    blk = zd.plus
    # (S D, D^T f, Lam) is again a null block when D commutes with Lam
    return dataclasses.replace(zd, plus=dataclasses.replace(blk, S=blk.S @ D, f=D.T @ blk.f))


@given(st.sampled_from(SUITE), st.lists(st.floats(0.05, 20.0), min_size=8, max_size=8))
def test_null_vector_scale_invariance(item, scales):
    _, plant = item
    res = gamma_star(plant)
    zu, yw = res.zu, res.yw
    D1 = _block_scaling(zu.plus.Lam, scales[:4])
    D2 = _block_scaling(yw.plus.Lam, scales[4:])
    g = build_gramians(_rescaled(zu, D1), _rescaled(yw, D2), plant)
    assert hat_gamma(build_E(g)) == pytest.approx(res.hat_gamma, rel=1e-9, abs=1e-12)
