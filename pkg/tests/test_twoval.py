"""Two-valuation solver: semi-EFX machinery and the case analysis."""

import random
from fractions import Fraction

import pytest

import support
from efx.core import (
    Additive,
    Bundle,
    Order,
    SparseClosure,
    compare_lex,
    empty_allocation,
    make_allocation,
    plexmin_vector,
    three_agent_example,
    validate_instance,
)
from efx.cycles import find_pi_cycle
from efx.envy import build_graph, is_efx
from efx.twoval import (
    EmptyGroup,
    Grouping,
    best_proper_subset,
    improve_step_twoval,
    infer_grouping,
    is_semi_efx,
    semi_to_efx,
    solve_twoval,
)


def closure(*pairs):
    return SparseClosure(tuple((Bundle.of(*s), Fraction(v)) for s, v in pairs))


def names(m):
    return tuple(f"g{j + 1}" for j in range(m))


def psi(inst, x, grouping):
    return plexmin_vector(inst, x, grouping.group_a, grouping.group_b)


@pytest.fixture
def e2():
    return three_agent_example()


@pytest.fixture
def e2_grouping(e2):
    return infer_grouping(e2)


class TestGrouping:
    def test_inferred_from_valuation_equality(self, e2, e2_grouping):
        assert e2_grouping == Grouping((0, 1), (2,))

    def test_empty_group_rejected(self):
        inst = validate_instance(("a",) , (Additive((Fraction(1),)),))
        with pytest.raises(EmptyGroup):
            solve_twoval(inst, Grouping((0,), ()))

    def test_three_distinct_valuations_rejected(self):
        from efx.core import PreconditionError
        from efx.oracle import counterexample_instance

        with pytest.raises(PreconditionError):
            infer_grouping(counterexample_instance())


class TestSemiEfx:
    def test_efx_implies_semi_efx(self, e2, e2_grouping):
        x = empty_allocation(e2)
        assert is_semi_efx(e2, x, e2_grouping)

    def test_envy_inside_group_b_is_tolerated(self):
        v_a = Additive((Fraction(5), Fraction(0), Fraction(0), Fraction(0)))
        v_b = Additive((Fraction(0), Fraction(1), Fraction(1), Fraction(5)))
        inst = validate_instance(names(4), (v_a, v_b, v_b))
        grouping = Grouping((0,), (1, 2))
        # agent 1 EFX-envies agent 2 (both group B): semi-EFX holds
        x = make_allocation(inst, [Bundle.of(0), Bundle.of(1), Bundle.of(2, 3)])
        assert not is_efx(inst, x)
        assert is_semi_efx(inst, x, grouping)

    def test_group_a_envy_breaks_semi_efx(self):
        v_a = Additive((Fraction(1), Fraction(1), Fraction(5)))
        v_b = Additive((Fraction(0), Fraction(0), Fraction(1)))
        inst = validate_instance(names(3), (v_a, v_b))
        grouping = Grouping((0,), (1,))
        x = make_allocation(inst, [Bundle.of(0), Bundle.of(1, 2)])
        assert not is_semi_efx(inst, x, grouping)


class TestSemiToEfx:
    def test_efx_input_unchanged(self, e2, e2_grouping):
        x = empty_allocation(e2)
        assert semi_to_efx(e2, x, e2_grouping) == x

    def test_removal_loop_reaches_efx(self):
        v_a = Additive((Fraction(5), Fraction(0), Fraction(0), Fraction(0)))
        v_b = Additive((Fraction(0), Fraction(1), Fraction(1), Fraction(5)))
        inst = validate_instance(names(4), (v_a, v_b, v_b))
        grouping = Grouping((0,), (1, 2))
        x = make_allocation(inst, [Bundle.of(0), Bundle.of(1), Bundle.of(2, 3)])
        y = semi_to_efx(inst, x, grouping)
        assert is_efx(inst, y)
        assert y.bundles[0] == x.bundles[0]
        assert y.bundles[1] == x.bundles[1]  # poorest group-B agent untouched
        assert y.bundles[2].issubset(x.bundles[2])
        assert y.bundles[2] == Bundle.of(3)

    def test_empty_group_b_means_already_efx(self):
        # with a single group-B agent no within-group envy is possible
        v_a = Additive((Fraction(1), Fraction(2)))
        v_b = Additive((Fraction(2), Fraction(1)))
        inst = validate_instance(names(2), (v_a, v_b))
        x = make_allocation(inst, [Bundle.of(1), Bundle.of(0)])
        grouping = Grouping((0,), (1,))
        assert semi_to_efx(inst, x, grouping) == x


class TestBestProperSubset:
    def test_drops_least_harmful_item(self):
        v = Additive((Fraction(5), Fraction(3), Fraction(1)))
        inst = validate_instance(names(3), (v,))
        assert best_proper_subset(inst, 0, Bundle.of(0, 1, 2)) == Bundle.of(0, 1)

    def test_singleton_gives_empty(self):
        v = Additive((Fraction(5),))
        inst = validate_instance(names(1), (v,))
        assert best_proper_subset(inst, 0, Bundle.of(0)) == Bundle(0)

    def test_empty_input_rejected(self):
        from efx.core import PreconditionError

        inst = three_agent_example()
        with pytest.raises(PreconditionError):
            best_proper_subset(inst, 0, Bundle(0))


def _case_3b_instance(a0_grabs_pair=False):
    # Crafted no-cycle state that sends the improve step into case 3b: the
    # poorest group-B agent prefers the best proper subset of a richer group-A
    # agent's bundle over both the decomposition top and the poorest group-A
    # candidate. With a0_grabs_pair the anchored champion set contains a0
    # herself (3b-A); otherwise only the group-B agent (3b-B).
    v_a = closure(
        ((0,), 5), ((1,), 4), ((2,), 7), ((3,), 6), ((4,), 1), ((5,), 3), ((6,), 2),
        ((0, 1), 10), ((2, 3), 20), ((4, 6), 12), ((0, 6), 9), ((1, 6), 8),
        ((0, 5), 11 if a0_grabs_pair else 9), ((1, 5), 8),
        ((4, 5, 6), 13), ((0, 1, 5), 14),
    )
    v_b = closure(
        ((0,), 5), ((1,), 4), ((2,), 30), ((3,), 35), ((4,), 2), ((5,), 6), ((6,), 3),
        ((0, 1), 25), ((2, 3), 60), ((4, 5), 50), ((0, 6), 52), ((0, 5), 37),
        ((0, 1, 5), 38),
    )
    inst = validate_instance(names(7), (v_a, v_a, v_b))
    x = make_allocation(inst, [Bundle.of(0, 1), Bundle.of(2, 3), Bundle.of(4, 5)])
    return inst, x, Grouping((0, 1), (2,))


class TestImproveStepCases:
    @pytest.mark.parametrize(
        "fixture_name,expected_label",
        [("tv-case-1", "case-1"), ("tv-case-2", "case-2"), ("tv-case-3a", "case-3a")],
    )
    def test_frozen_fixtures_drive_each_case(self, fixture_name, expected_label):
        inst, x = support.load_step_fixture(fixture_name)
        grouping = infer_grouping(inst)
        assert is_efx(inst, x)
        assert find_pi_cycle(build_graph(inst, x)) is None
        before = psi(inst, x, grouping)
        y, label = improve_step_twoval(inst, x, grouping)
        assert label == expected_label
        assert is_efx(inst, y)
        assert compare_lex(psi(inst, y, grouping), before) is Order.GREATER

    @pytest.mark.parametrize("variant,expected_label", [(True, "case-3b-A"), (False, "case-3b-B")])
    def test_case_3b_variants(self, variant, expected_label):
        inst, x, grouping = _case_3b_instance(a0_grabs_pair=variant)
        assert is_efx(inst, x)
        assert find_pi_cycle(build_graph(inst, x)) is None
        before = psi(inst, x, grouping)
        y, label = improve_step_twoval(inst, x, grouping)
        assert label == expected_label
        assert is_efx(inst, y)
        assert compare_lex(psi(inst, y, grouping), before) is Order.GREATER

    def test_pi_shortcut_from_empty(self, e2, e2_grouping):
        y, label = improve_step_twoval(e2, empty_allocation(e2), e2_grouping)
        assert label == "pi"
        assert is_efx(e2, y)


class TestSolveTwoval:
    def test_three_agent_example_completes(self, e2, e2_grouping):
        x = solve_twoval(e2, e2_grouping)
        assert x.complete and is_efx(e2, x)

    def test_output_is_a_known_complete_efx_allocation(self, e2, e2_grouping):
        from efx.oracle import enumerate_complete_efx

        x = solve_twoval(e2, e2_grouping)
        assert x in enumerate_complete_efx(e2)

    def test_two_agents_one_per_group(self):
        v_a = Additive((Fraction(3), Fraction(1), Fraction(2)))
        v_b = Additive((Fraction(1), Fraction(4), Fraction(2)))
        inst = validate_instance(names(3), (v_a, v_b))
        x = solve_twoval(inst, Grouping((0,), (1,)))
        assert x.complete and is_efx(inst, x)

    def test_random_instances_complete_with_increasing_psi(self):
        rng = random.Random(4040)
        for _ in range(40):
            n = rng.choice([2, 3, 4, 5])
            m = rng.randint(1, 8)
            inst, grouping = support.random_two_valuation_instance(rng, n, m)
            trace = []
            x = solve_twoval(inst, grouping, trace)
            assert x.complete and is_efx(inst, x)
            vectors = [vector for _, vector in trace]
            for previous, current in zip(vectors, vectors[1:]):
                assert compare_lex(current, previous) is Order.GREATER
