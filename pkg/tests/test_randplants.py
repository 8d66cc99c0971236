import numpy as np

from hinflimit.gamma import Case, gamma_star
from hinflimit.randplants import CASE_ORDER, random_suite


def test_deterministic():
    a = random_suite(9, 8)
    b = random_suite(9, 8)
    assert [p.to_dict() for _, p in a] == [p.to_dict() for _, p in b]
    c = random_suite(10, 8)
    assert [p.to_dict() for _, p in a] != [p.to_dict() for _, p in c]


def test_case_coverage():
    suite = random_suite(7, 24, (2, 6))
    for case, plant in suite:
        assert 2 <= plant.n <= 6
        assert gamma_star(plant).case_id is case
    for case in CASE_ORDER:
        assert sum(c is case for c, _ in suite) == 6


def test_single_case():
    suite = random_suite(1, 5, (3, 3), cases=(Case.CASE4,))
    assert all(p.n == 3 and p.d12 * p.d21 == 0.0 for _, p in suite)
    assert all(np.isfinite(gamma_star(p).gamma_star) for _, p in suite)
