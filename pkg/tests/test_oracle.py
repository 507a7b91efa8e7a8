"""Brute-force references and the counterexample fixture."""

import random
from fractions import Fraction

import pytest

import support
from efx.core import Additive, Bundle, GuardExceeded, make_allocation, two_agent_example, validate_instance
from efx.envy import is_efx, min_preferred_set
from efx.oracle import (
    brute_min_preferred,
    counterexample_baseline,
    counterexample_instance,
    enumerate_complete_efx,
    verify_counterexample,
)


class TestEnumerateCompleteEfx:
    def test_two_agent_example(self):
        inst = two_agent_example()
        found = enumerate_complete_efx(inst)
        split = make_allocation(inst, [Bundle.of(0), Bundle.of(1)])
        lopsided = make_allocation(inst, [Bundle(0), Bundle.of(0, 1)])
        assert split in found
        assert lopsided not in found

    def test_single_agent_always_efx(self):
        inst = validate_instance(("a", "b"), (Additive((Fraction(1), Fraction(2))),))
        found = enumerate_complete_efx(inst)
        assert len(found) == 1
        assert found[0].bundles == (Bundle.of(0, 1),)

    def test_no_items(self):
        inst = validate_instance((), (Additive(()), Additive(())))
        found = enumerate_complete_efx(inst)
        assert len(found) == 1
        assert found[0].complete

    def test_guard(self):
        inst = validate_instance(
            tuple(f"i{k}" for k in range(18)),
            tuple(Additive((Fraction(1),) * 18) for _ in range(5)),
        )
        with pytest.raises(GuardExceeded):
            enumerate_complete_efx(inst)

    def test_partitioned_runs_merge_to_the_same_list(self):
        rng = random.Random(7)
        inst = support.random_instance(rng, 3, 4)
        total = inst.n**inst.m
        cut = total // 3
        merged = (
            enumerate_complete_efx(inst, 0, cut)
            + enumerate_complete_efx(inst, cut, 2 * cut)
            + enumerate_complete_efx(inst, 2 * cut, total)
        )
        assert merged == enumerate_complete_efx(inst)

    def test_every_result_is_complete_and_efx(self):
        rng = random.Random(8)
        inst = support.random_instance(rng, 2, 5)
        for allocation in enumerate_complete_efx(inst):
            assert allocation.complete
            assert is_efx(inst, allocation)


class TestBruteMinPreferred:
    def test_agrees_with_the_search_implementation(self):
        rng = random.Random(70)
        for _ in range(600):
            inst = support.random_instance(rng, rng.randint(1, 3), rng.randint(1, 8))
            x = support.random_allocation(rng, inst)
            i = rng.randrange(inst.n)
            s = Bundle(rng.randrange(1 << inst.m))
            assert brute_min_preferred(inst, x, i, s) == min_preferred_set(inst, x, i, s)

    def test_absent_cases_agree(self):
        inst = two_agent_example()
        x = make_allocation(inst, [Bundle.of(0, 1), Bundle(0)])
        assert brute_min_preferred(inst, x, 0, Bundle.of(1)) is None
        assert min_preferred_set(inst, x, 0, Bundle.of(1)) is None

    def test_preferred_singleton(self):
        inst = two_agent_example()
        x = make_allocation(inst, [Bundle(0), Bundle(0)])
        assert brute_min_preferred(inst, x, 0, Bundle.of(0)) == Bundle.of(0)


class TestCounterexample:
    def test_table_spot_values(self):
        inst = counterexample_instance()
        g1, g2, g3, g4, g5, g6, g7 = range(7)
        v1 = lambda *items: inst.value(1, Bundle.of(*items))
        v2 = lambda *items: inst.value(2, Bundle.of(*items))
        assert v1(g3, g4) == 122
        assert v1(g5, g7) == 152
        assert v1(g1) == 100
        assert v1(g4, g5, g6) == 3
        assert v1() == 0
        assert v2(g5, g6) == 122
        assert v2(g3, g7) == 152

    def test_baseline_is_efx_with_one_pool_item(self):
        inst = counterexample_instance()
        x = counterexample_baseline(inst)
        assert is_efx(inst, x)
        assert len(x.pool) == 1
        assert inst.value(0, x.bundles[0]) == 2

    def test_verification_report(self):
        report = verify_counterexample()
        assert report.baseline_value == 2
        assert report.complete_efx_count > 0
        assert report.max_complete_value < report.baseline_value
        assert report.inequalities_checked > 2 * (28 + 1 + 7 * 64)
