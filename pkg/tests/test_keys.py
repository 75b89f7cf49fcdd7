import random

import pytest
from hypothesis import given, strategies as st

from fhevec.keys import (BudgetInfeasible, NonPositiveStep, UnknownStep, components,
                         default_beta, naf, naf_digits, plan_from_omega, plan_keys,
                         realization_cost, total_realization_cost)

CHI = [1, 2, 3, 4, 5, 6, 7, 9, 10, 12, 11, 13, 15]
OMEGA = [1, 2, 3, 4, 5, 6, 7, 9, 12, 15]
LISTED = {1: {1}, 2: {2}, 3: {-1, 4}, 4: {4}, 5: {1, 4}, 6: {-2, 8}, 7: {-1, 8}, 9: {1, 8},
          10: {2, 8}, 12: {-4, 16}, 11: {-1, -4, 16}, 13: {1, -4, 16}, 15: {-1, 16}}


@pytest.mark.parametrize("s", sorted(LISTED))
def test_listed_nafs(s):
    assert set(naf(s)) == LISTED[s]
    assert len(naf(s)) == len(LISTED[s])


def test_reduced_components_drop_full_turns():
    assert set(components(12, 16)) == {-4}
    assert set(components(11, 16)) == {-1, -4}
    assert set(components(15, 16)) == {-1}


@given(st.integers(1, 10**9))
def test_naf_validity(s):
    d = naf_digits(s)
    assert set(d) <= {-1, 0, 1}
    assert all(not (d[i] and d[i + 1]) for i in range(len(d) - 1))
    assert sum(x << i for i, x in enumerate(d)) == s
    assert sum(naf(s)) == s


def test_naf_rejects_nonpositive():
    with pytest.raises(NonPositiveStep):
        naf(0)
    with pytest.raises(NonPositiveStep):
        plan_keys([0, 1], 16)


def test_listed_omega_gives_nine_keys():
    plan = plan_from_omega(CHI, 16, OMEGA, 9)
    plan.check()
    assert plan.keys == {10, 11, 13, 1, 2, 4, -1, -4, 8}
    assert plan.chi_f == {10, 11, 13}
    assert realization_cost(plan, 10) == 1
    assert realization_cost(plan, 3) == 2
    for s in plan.keys & plan.chi:
        assert realization_cost(plan, s) == 1


def test_planner_on_listed_instance():
    plan = plan_keys(CHI, 16, 9)
    plan.check()
    assert len(plan.keys) <= 9


def test_identity_plan_when_budget_allows():
    plan = plan_keys([1, 2], 16, 8)
    assert plan.keys == {1, 2} and not plan.omega


def test_default_beta():
    assert default_beta(16) == 8 and default_beta(1024) == 20


def test_errors():
    with pytest.raises(BudgetInfeasible):
        plan_keys(list(range(1, 16)), 16, 1)
    with pytest.raises(ValueError):
        plan_keys([16], 16, 4)
    with pytest.raises(UnknownStep):
        realization_cost(plan_keys([1, 2], 16, 4), 3)
    with pytest.raises(UnknownStep):
        plan_from_omega([1, 2], 16, [3], 4)


def test_negative_components_are_distinct_keys():
    plan = plan_from_omega([3, 7], 16, [3, 7], 8)
    assert -1 in plan.keys and 1 not in plan.keys


def _instances(count, seed):
    rng = random.Random(seed)
    for _ in range(count):
        n = 2 ** rng.randint(2, 10)
        chi = rng.sample(range(1, n), rng.randint(1, min(n - 1, 14)))
        yield chi, n, rng.randint(1, 2 * n.bit_length())


def test_thousand_random_plans_feasible():
    ok = 0
    for chi, n, beta in _instances(1000, 1):
        try:
            plan = plan_keys(chi, n, beta)
        except BudgetInfeasible:
            continue
        plan.check()
        for s in chi:
            assert sum(plan.realization[s]) % n == s
        ok += 1
    assert ok > 500


def test_realization_cost_non_increasing_in_beta():
    for chi, n, _ in _instances(60, 2):
        prev = None
        for beta in range(1, len(chi) + 2):
            try:
                cost = total_realization_cost(plan_keys(chi, n, beta))
            except BudgetInfeasible:
                continue
            if prev is not None:
                assert cost <= prev
            prev = cost


def test_key_count_grows_with_slack():
    # a looser budget lets more steps keep their own key, so |keys| is not
    # monotone non-increasing in beta; the rotation count is (see above)
    counts = [len(plan_keys([1, 2, 3, 5, 6], 16, b).keys) for b in (3, 4, 5)]
    assert counts == [3, 4, 5]
