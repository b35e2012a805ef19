import math
from collections import Counter
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from scipy.stats import norm

from commands.cover_command import sweep_grid
from lib.cover import (
    Cover,
    assign_cover,
    closed_form_cover_probability,
    cover_secure_probability,
    dump_cover,
    exact_cover_probability,
    load_cover,
    mc_cover_probability,
    step_one_quota,
)
from utils.exceptions import DomainError, InfeasibleCoverError


def test_quota():
    assert step_one_quota(4, 2) == 2
    assert step_one_quota(5, 2) == 3
    assert step_one_quota(3, 4) == 1


@pytest.mark.parametrize("n_e, n_o, l", [(4, 2, 2), (7, 3, 4), (5, 5, 1), (6, 2, 6)])
def test_assigned_cover_shape(n_e, n_o, l):
    cover = assign_cover(n_e, n_o, l, seed=11)
    assert all(len(served) == l for served in cover.assignment)
    assert cover.unserved() == []
    assert cover == assign_cover(n_e, n_o, l, seed=11)


def test_cover_file_round_trip():
    cover = assign_cover(6, 3, 3, seed=2)
    assert load_cover(dump_cover(cover)) == cover


def test_is_secure():
    cover = Cover(4, 2, 2, (frozenset({0, 1}), frozenset({2, 3})))
    assert not cover.is_secure({0, 1, 2}, {1})
    assert cover.is_secure({0, 2, 3}, {1})
    assert cover.is_secure(set(), {0})


@pytest.mark.parametrize("n_e, n_o, l", [(4, 2, 1), (4, 2, 5), (0, 2, 1)])
def test_infeasible_fan_out(n_e, n_o, l):
    with pytest.raises(InfeasibleCoverError):
        assign_cover(n_e, n_o, l)


@pytest.mark.parametrize("t_e, t_o", [(4, 0), (-1, 0), (1, 2)])
def test_corruption_out_of_range(t_e, t_o):
    with pytest.raises(DomainError):
        cover_secure_probability(4, 2, t_e, t_o, 2)


def test_one_honest_e_party_is_found_with_odds_l_over_n():
    assert cover_secure_probability(4, 2, 3, 1, 2).value == pytest.approx(0.5)
    assert exact_cover_probability(4, 2, 3, 1, 2) == Fraction(1, 2)


def test_no_corrupt_e_parties_is_always_secure():
    assert cover_secure_probability(6, 3, 0, 2, 2) == (1.0, False)


@pytest.mark.parametrize("point, expected", [((4, 2, 3, 1, 2), Fraction(1, 2)), ((8, 2, 5, 1, 5), Fraction(55, 56)), ((6, 3, 4, 1, 2), Fraction(14, 15))])
def test_closed_form_matches_exact_when_quotas_divide(point, expected):
    assert closed_form_cover_probability(*point) == exact_cover_probability(*point) == expected


def test_falls_back_to_exact_outside_the_closed_form():
    assert closed_form_cover_probability(5, 2, 3, 0, 3) is None
    result = cover_secure_probability(5, 2, 3, 0, 3)
    assert result.fallback
    assert result.value == pytest.approx(float(exact_cover_probability(5, 2, 3, 0, 3)))


def test_quota_remainder_falls_back_with_a_flag():
    assert closed_form_cover_probability(5, 3, 4, 1, 2) is not None
    result = cover_secure_probability(5, 3, 4, 1, 2)
    assert result.fallback
    assert result.value == pytest.approx(float(exact_cover_probability(5, 3, 4, 1, 2)))
    assert not cover_secure_probability(4, 2, 3, 1, 2).fallback


def test_monte_carlo_interval_brackets_its_estimate():
    result = mc_cover_probability(4, 2, 3, 1, 2, trials=2000, seed=1)
    assert result.low <= result.estimate <= result.high
    assert result.trials == 2000
    with pytest.raises(DomainError):
        mc_cover_probability(4, 2, 3, 1, 2, trials=0)


def family_sigmas(checks: int) -> float:
    """Per-check bound that keeps the whole family at three sigma."""
    return float(norm.isf(norm.sf(3) / checks))


def enumerated_secure_probability(n_e, n_o, t_e, t_o, l, seeds):
    covers = Counter(assign_cover(n_e, n_o, l, seed=s) for s in range(seeds))
    placements = [(set(e), set(o)) for e in combinations(range(n_e), t_e) for o in combinations(range(n_o), t_o)]
    secure = sum(count * sum(cover.is_secure(e, o) for e, o in placements) for cover, count in covers.items())
    return Fraction(secure, seeds * len(placements))


def test_every_cover_is_secure_when_all_o_parties_are_honest():
    assert enumerated_secure_probability(4, 2, 2, 0, 2, seeds=200) == exact_cover_probability(4, 2, 2, 0, 2) == 1


@pytest.mark.slow
def test_exact_probability_matches_sampled_covers():
    enumerated = enumerated_secure_probability(5, 3, 3, 1, 2, seeds=4000)
    assert float(enumerated) == pytest.approx(float(exact_cover_probability(5, 3, 3, 1, 2)), abs=0.01)


ALL_BUT_ONE_CORRUPT = [
    (2, 1, 2), (2, 2, 1), (3, 1, 3), (3, 2, 2), (3, 3, 1),
    (4, 2, 2), (4, 2, 3), (4, 4, 1), (5, 2, 3), (5, 3, 2),
    (5, 3, 4), (6, 2, 3), (6, 3, 2), (6, 3, 5), (6, 4, 2),
    (7, 2, 4), (7, 3, 3), (7, 4, 6), (8, 3, 3), (8, 4, 2),
]


@pytest.mark.parametrize("n_e, n_o, l", ALL_BUT_ONE_CORRUPT)
def test_all_but_one_corrupt_is_l_over_n(n_e, n_o, l):
    point = (n_e, n_o, n_e - 1, n_o - 1, l)
    assert exact_cover_probability(*point) == Fraction(l, n_e)
    assert cover_secure_probability(*point).value == pytest.approx(l / n_e)
    estimate = mc_cover_probability(*point, trials=20_000, seed=10 * n_e + l)
    assert estimate.within(l / n_e, family_sigmas(len(ALL_BUT_ONE_CORRUPT)))


@pytest.mark.slow
def test_cover_pairs_are_uniform():
    n_e, n_o, l, seeds = 6, 3, 3, 10_000
    counts = np.zeros((n_o, n_e))
    for s in range(seeds):
        for o, served in enumerate(assign_cover(n_e, n_o, l, seed=s).assignment):
            counts[o, sorted(served)] += 1
    p = l / n_e
    sigma = math.sqrt(seeds * p * (1 - p))
    assert np.abs(counts - seeds * p).max() <= family_sigmas(counts.size) * sigma


@pytest.mark.slow
def test_formula_and_monte_carlo_across_the_sweep():
    grid = sweep_grid()
    sigmas = family_sigmas(len(grid))
    for i, point in enumerate(grid):
        formula = cover_secure_probability(*point)
        assert formula.value == pytest.approx(float(exact_cover_probability(*point))), point
        estimate = mc_cover_probability(*point, trials=100_000, seed=i)
        assert estimate.within(formula.value, sigmas), point
