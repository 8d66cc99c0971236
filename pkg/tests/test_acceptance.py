"""Acceptance criteria, one marked group per criterion.

The terminal summary prints one PASS/FAIL line per criterion. Parts that
are known not to hold are strict xfails: they still run in full, their
criterion is reported as FAIL, and an unexpected pass fails the suite.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import place_poles

import hinflimit.oracle as oracle
from conftest import tf_plant
from hinflimit.gamma import Case, build_E, gamma_star, hat_gamma
from hinflimit.lyap import build_gramians, gramian, inv_sqrt
from hinflimit.plant import Channel, StateSpacePlant, channel_realization, transfer_eval
from hinflimit.randplants import random_suite
from hinflimit.sdp import SdpStatus
from test_gamma import SUITE, _axis_plant, _block_scaling, _rescaled
from test_lyap import _anti_stable, _quad_gramian
from test_oracle import completion_instance

# every solve made through the oracle during this module
SOLVES: list = []


@pytest.fixture(autouse=True, scope="module")
def _record_solves():
    real = oracle.sdp_solve

    def recording(p, opts=None):
        sol = real(p, opts)
        SOLVES.append((p, sol))
        return sol

    mp = pytest.MonkeyPatch()
    mp.setattr(oracle, "sdp_solve", recording)
    yield
    mp.undo()


def _solve(p):
    return oracle.sdp_solve(p)


def _weak_duality_excess(p, sol):
    """``b^T y - <C, X>`` minus what the residuals of the iterate allow.

    From ``<C, X> - b^T y = <C - A*(y), X> + y^T (A(X) - b)`` the excess is
    at most ``|y^T r_p|`` plus the cone violations of ``X`` and the slack.
    """
    X, y = sol.X, sol.y
    allow = abs(float(y @ (p.op(X) - p.b)))
    for Xk, Zk in zip(X, p.slack(y)):
        if Xk.size:
            allow += max(0.0, -np.linalg.eigvalsh(Zk)[0]) * abs(np.trace(Xk))
            allow += max(0.0, -np.linalg.eigvalsh(Xk)[0]) * np.abs(Zk).sum()
    excess = sol.dual_objective - sol.primal_objective - allow
    return excess / (1.0 + abs(sol.primal_objective))


# -- 1 -------------------------------------------------------------------


@pytest.mark.criterion(1)
@pytest.mark.parametrize("z, p, value", [(1.0, 2.0, 3.0), (2.0, 4.0, 3.0), (0.5, 3.0, 1.4)])
def test_c1_example1_closed_form(z, p, value, record_property):
    plant = tf_plant([z], [p, -1.0])
    assert abs((p + z) / (p - z)) == pytest.approx(value)
    gamma_star(plant)
    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        res = gamma_star(plant)
        best = min(best, time.perf_counter() - t0)
    assert res.gamma_star == pytest.approx(value, rel=1e-9)
    assert best < 0.010
    record_property("note", f"(z,p)=({z},{p}): gamma*={res.gamma_star!r}, {best * 1e3:.2f} ms")


# -- 2 -------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_c2_example2(record_property):
    z, p = np.array([1.0, 2.0]), 4.0
    res = gamma_star(tf_plant(z, [p, -1.0, -3.0]))
    assert res.gamma_star == pytest.approx(5.0, abs=1e-8)
    g = res.gramians
    # unit f/g normalization: rescale each null vector by 1/f_i
    order = np.argsort(np.diag(res.zu.plus.Lam))
    zs = np.diag(res.zu.plus.Lam)[order]
    assert zs == pytest.approx(z)
    D1 = np.diag(1.0 / res.zu.plus.f)[np.ix_(order, order)]
    D2 = np.diag(1.0 / res.yw.plus.f)
    F = D1.T @ g.F_plus[np.ix_(order, order)] @ D1
    G = D2 @ g.G_plus @ D2
    J = D2 @ g.J_plus[:, order] @ D1
    assert F == pytest.approx(1.0 / (z[:, None] + z[None, :]), abs=1e-12)
    assert G == pytest.approx(np.array([[1.0 / (2 * p)]]), abs=1e-12)
    assert J == pytest.approx(1.0 / (p - z[None, :]), abs=1e-12)
    sig = np.linalg.norm(inv_sqrt(G) @ J @ inv_sqrt(F), 2)
    assert np.sqrt(1 + sig ** 2) == pytest.approx(res.gamma_star, rel=1e-10)
    printed = np.sqrt(p * z.sum() * (p ** 2 + z.prod())) / (abs(p - z[0]) * abs(p - z[1]))
    record_property(
        "note", f"gamma*={res.gamma_star!r}, sigma_max={sig:.12g}, printed sigma expression gives {printed:.12g}"
    )


# -- 3 -------------------------------------------------------------------

EX3_PAIRS = [(2.0, 0.7), (1.0, 3.0), (0.5, 1.5)]


def _chain_normalizer(f):
    # Toeplitz change of chain basis taking f to (1, 0), then the sign
    # convention under which the chain's off-diagonal Gramian entries are positive
    M = np.array([[1.0 / f[0], -f[1] / f[0] ** 2], [0.0, 1.0 / f[0]]])
    return M @ np.diag([1.0, -1.0])


def _example3(z, p):
    res = gamma_star(tf_plant([z, z], [p, p, -1.0, -2.0]))
    g = res.gramians
    M = _chain_normalizer(res.zu.plus.f)
    N = _chain_normalizer(res.yw.plus.f)
    F = M.T @ g.F_plus @ M
    G = N.T @ g.G_plus @ N
    J = N.T @ g.J_plus @ M
    return res, F, G, J


def _printed_sigma(z, p):
    return 2 * np.sqrt(p * z) / (z - p) ** 3 * ((p + z) ** 4 + np.sqrt(p ** 4 + 14 * p ** 2 * z ** 2 + z ** 4))


@pytest.mark.criterion(3)
@pytest.mark.parametrize("z, p", EX3_PAIRS)
def test_c3_example3_F_G(z, p):
    _, F, G, _ = _example3(z, p)
    F_printed = np.array([[1 / (2 * z), 1 / (4 * z ** 2)], [1 / (4 * z ** 2), 1 / (4 * z ** 3)]])
    G_printed = np.array([[1 / (2 * p), 1 / (4 * p ** 2)], [1 / (4 * p ** 2), 1 / (4 * p ** 3)]])
    assert np.abs(F - F_printed).max() <= 1e-10
    assert np.abs(G - G_printed).max() <= 1e-10


@pytest.mark.criterion(3)
@pytest.mark.xfail(strict=True, reason="printed J+ disagrees with the Gramian data; see ledger")
@pytest.mark.parametrize("z, p", EX3_PAIRS)
def test_c3_example3_J(z, p, record_property):
    _, _, _, J = _example3(z, p)
    a = 1 / (z - p)
    J_printed = np.array([[a, a ** 2], [-a, 2 * a ** 3]])
    ours = np.array([[a, a ** 2], [-a ** 2, -2 * a ** 3]])
    # the J we compute is the matrix above up to the free sign of the yw chain
    assert min(np.abs(J - ours).max(), np.abs(J + ours).max()) <= 1e-10
    record_property("note", f"J+ at (z,p)=({z},{p}) is +-[[a, a^2], [-a^2, -2a^3]], a=1/(z-p)")
    assert min(np.abs(J - J_printed).max(), np.abs(J + J_printed).max()) <= 1e-10


@pytest.mark.criterion(3)
@pytest.mark.parametrize("z, p", EX3_PAIRS)
def test_c3_example3_consistency(z, p, record_property):
    res, F, G, J = _example3(z, p)
    g = res.gramians
    sig = np.linalg.norm(inv_sqrt(g.G_plus) @ g.J_plus @ inv_sqrt(g.F_plus), 2)
    # basis-free: the normalized matrices give the same sigma
    assert np.linalg.norm(inv_sqrt(G) @ J @ inv_sqrt(F), 2) == pytest.approx(sig, rel=1e-9)
    hg = hat_gamma(build_E(g))
    assert abs(hg ** 2 - (1 + sig ** 2)) <= 1e-9 * max(1.0, hg ** 2)
    printed = _printed_sigma(z, p)
    record_property(
        "note",
        f"(z,p)=({z},{p}): sigma_max={sig:.6g}, printed expression gives {printed:.6g}, gamma_hat={hg:.6g}",
    )


@pytest.mark.criterion(3)
def test_c3_example3_oracle():
    plant = tf_plant([2.0, 2.0], [0.7, 0.7, -1.0, -2.0])
    br = oracle.bisect_gamma_detailed(plant, tol=5e-6)
    assert br.conclusive
    assert abs(br.gamma - gamma_star(plant).gamma_star) <= 1e-5


# -- 4 -------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_c4_oracle_equivalence(record_property):
    suite = random_suite(7, 50, (2, 6))
    t0 = time.perf_counter()
    counts = {c: 0 for c in (Case.CASE1, Case.CASE2, Case.CASE3, Case.CASE4)}
    conclusive, worst, wrong = 0, 0.0, []
    for i, (case, plant) in enumerate(suite):
        res = gamma_star(plant)
        assert res.case_id is case
        counts[case] += 1
        br = oracle.bisect_gamma_detailed(plant, tol=5e-6)
        if not br.conclusive:
            continue
        conclusive += 1
        gap = abs(res.gamma_star - br.gamma)
        worst = max(worst, gap)
        if gap > 1e-5:
            wrong.append((i, gap))
    elapsed = time.perf_counter() - t0
    record_property(
        "note",
        f"{conclusive}/50 conclusive, max gap {worst:.2e}, {elapsed:.1f} s, per case "
        + ", ".join(f"{c.value}={k}" for c, k in counts.items()),
    )
    assert min(counts.values()) >= 8
    assert not wrong
    assert conclusive >= 45
    assert elapsed < 300


# -- 5 -------------------------------------------------------------------


def _stable_zero_plant(rng, n):
    A = rng.standard_normal((n, n))
    b2 = rng.standard_normal(n)
    c2 = rng.standard_normal(n)
    d12, d21 = 1.0, 1.0
    # zeros of u -> z are eig(A - b2 c1^T / d12), of w -> y eig(A^T - c2 b1^T / d21)
    c1 = d12 * place_poles(A, b2[:, None], -np.arange(1.0, n + 1)).gain_matrix[0]
    b1 = d21 * place_poles(A.T, c2[:, None], -0.5 - np.arange(n)).gain_matrix[0]
    return StateSpacePlant(A, b1, b2, c1, c2, rng.standard_normal(), d12, d21)


@pytest.mark.criterion(5)
@pytest.mark.parametrize("seed", range(4))
def test_c5_all_stable_zeros(seed, record_property):
    plant = _stable_zero_plant(np.random.default_rng(seed), 2 + seed)
    res = gamma_star(plant)
    assert res.gamma_star == 0.0
    assert res.diagnostics["short_circuit"]
    br = oracle.bisect_gamma_detailed(plant, tol=1e-5)
    assert br.conclusive and br.gamma <= 1e-4
    record_property("note", f"n={plant.n}: oracle {br.gamma:.2e}")


# -- 6 -------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_c6_case4_bound():
    for _, plant in random_suite(13, 10, (2, 6), cases=(Case.CASE4,)):
        assert plant.d12 * plant.d21 == 0.0
        res = gamma_star(plant)
        assert res.gamma_star >= abs(plant.d11)
        assert res.feedthrough_term == abs(plant.d11)


@pytest.mark.criterion(6)
def test_c6_case4_equality():
    # stable minimum-phase P: no unstable zero or pole, so only |d11| remains
    res = gamma_star(tf_plant([-1.0, -4.0], [-2.0, -3.0, -5.0]))
    assert res.hat_gamma == 0.0 and not res.imag_terms_zu and not res.imag_terms_yw
    assert res.gamma_star == 1.0 == res.feedthrough_term


# -- 7 -------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_c7_axis_correction(record_property):
    plant = _axis_plant()
    assert not np.any(np.isclose(np.linalg.eigvals(plant.A), 1j))
    res = gamma_star(plant)
    gzw = abs(transfer_eval(channel_realization(plant, Channel.ZW), 1j))
    (lam, term), = res.imag_terms_zu
    assert lam == pytest.approx(1j, abs=1e-12)
    assert abs(term - gzw) <= 1e-9
    assert res.gamma_star >= gzw
    record_property("note", f"|G_zw(j)|={gzw:.12g}, term={term:.12g}, gamma*={res.gamma_star:.12g}")


# -- 8 -------------------------------------------------------------------


def _pattern_run(case):
    rows = []
    for _, plant in random_suite(11, 10, cases=(case,)):
        res = gamma_star(plant)
        if case is Case.CASE4:
            dual = oracle.assemble_lmi_full(plant, perp="nullvec", zu=res.zu, yw=res.yw)
        else:
            dual = oracle.assemble_lmi2(plant, res.zu, res.yw)
        sol = _solve(dual)
        if sol.status is not SdpStatus.OPTIMAL:
            sol, _, _ = oracle.polish_dual(dual)
        worst = max(oracle.dual_pattern(dual, sol).values())
        red, _ = oracle.facial_reduce_dual(dual)
        probe = oracle.strict_feasibility_probe(red)
        rows.append((worst, probe.status))
    return rows


@pytest.mark.criterion(8)
def test_c8_case2_patterns(record_property):
    rows = _pattern_run(Case.CASE2)
    record_property("note", "Case2 worst pattern/trace: " + ", ".join(f"{w:.1e}" for w, _ in rows))
    assert all(s is oracle.ProbeStatus.STRICTLY_FEASIBLE for _, s in rows)
    assert all(w <= 1e-6 for w, _ in rows)


@pytest.mark.criterion(8)
@pytest.mark.xfail(strict=True, reason="singular-case duals are not solved to 1e-6 faces in double precision; see ledger")
def test_c8_case4_patterns(record_property):
    rows = _pattern_run(Case.CASE4)
    record_property(
        "note",
        f"Case4 {sum(w <= 1e-6 for w, _ in rows)}/10 within 1e-6; worst pattern/trace: "
        + ", ".join(f"{w:.1e}" for w, _ in rows),
    )
    assert all(s is oracle.ProbeStatus.STRICTLY_FEASIBLE for _, s in rows)
    assert all(w <= 1e-6 for w, _ in rows)


@pytest.mark.criterion(8)
def test_c8_case4_reduced_strictly_feasible():
    for _, plant in random_suite(11, 10, cases=(Case.CASE4,)):
        res = gamma_star(plant)
        dual = oracle.assemble_lmi_full(plant, perp="nullvec", zu=res.zu, yw=res.yw)
        red, _ = oracle.facial_reduce_dual(dual)
        assert oracle.strict_feasibility_probe(red).status is oracle.ProbeStatus.STRICTLY_FEASIBLE


# -- 9 -------------------------------------------------------------------


@pytest.mark.criterion(9)
@settings(max_examples=60)
@given(st.sampled_from(SUITE), st.integers(0, 2 ** 32 - 1))
def test_c9_similarity(item, seed):
    _, plant = item
    rng = np.random.default_rng(seed)
    V = np.eye(plant.n) + 0.5 * rng.standard_normal((plant.n, plant.n))
    if np.linalg.cond(V) > 50:
        return
    a = gamma_star(plant).gamma_star
    b = gamma_star(plant.transformed(V)).gamma_star
    assert abs(a - b) <= 1e-7 * max(abs(a), 1.0)


@pytest.mark.criterion(9)
@settings(max_examples=60)
@given(st.sampled_from(SUITE), st.lists(st.floats(0.05, 20.0), min_size=8, max_size=8))
def test_c9_null_vector_scaling(item, scales):
    _, plant = item
    res = gamma_star(plant)
    D1 = _block_scaling(res.zu.plus.Lam, scales[:4])
    D2 = _block_scaling(res.yw.plus.Lam, scales[4:])
    g = build_gramians(_rescaled(res.zu, D1), _rescaled(res.yw, D2), plant)
    assert abs(hat_gamma(build_E(g)) - res.hat_gamma) <= 1e-7 * max(res.hat_gamma, 1.0)


@pytest.mark.criterion(9)
@settings(max_examples=30)
@given(_anti_stable())
def test_c9_gramian_quadrature(data):
    Lam, q = data
    Xq = _quad_gramian(Lam, q)
    assert np.abs(gramian(Lam, q) - Xq).max() <= 1e-6 * max(1.0, np.abs(Xq).max())


@pytest.mark.criterion(9)
@settings(max_examples=100)
@given(completion_instance())
def test_c9_completion(inst):
    U11, U31, U22, U32, U33 = inst
    U21 = oracle.matrix_completion(U11, U31, U22, U32, U33)
    M = oracle.completed_matrix(U11, U21, U31, U22, U32, U33)
    assert np.linalg.eigvalsh(M)[0] >= -1e-9 * max(np.trace(M), 1.0)


@pytest.mark.criterion(9)
def test_c9_weak_duality(record_property):
    # make sure the record is never empty when run on its own
    for _, plant in random_suite(2, 4, (2, 4)):
        res = gamma_star(plant)
        oracle.lmi_value(oracle.assemble_reduced(plant, zu=res.zu, yw=res.yw))
    optimal = [sol for _, sol in SOLVES if sol.status is SdpStatus.OPTIMAL]
    bad_opt = [sol for sol in optimal if not oracle.weak_duality_holds(sol)]
    worst = max(_weak_duality_excess(p, sol) for p, sol in SOLVES)
    record_property(
        "note",
        f"{len(SOLVES)} solves, {len(optimal)} Optimal with {len(bad_opt)} violating weak duality; "
        f"worst residual-corrected excess over all solves {worst:.1e}",
    )
    assert optimal and not bad_opt
    assert worst <= 1e-8
