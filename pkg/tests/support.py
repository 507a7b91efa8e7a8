"""Shared helpers for the test suite: seeded random instances and allocations."""

from __future__ import annotations

import json
import pathlib
import random
from fractions import Fraction

from efx.core import (
    Additive,
    Allocation,
    Bundle,
    FullTable,
    Instance,
    SparseClosure,
    make_allocation,
    validate_instance,
)
from efx.twoval import Grouping


def item_names(m: int) -> tuple[str, ...]:
    return tuple(f"g{j + 1}" for j in range(m))


def random_additive(rng: random.Random, m: int, top: int = 5) -> Additive:
    return Additive(tuple(Fraction(rng.randint(0, top)) for _ in range(m)))


def random_closure(rng: random.Random, m: int) -> SparseClosure:
    if m == 0:
        return SparseClosure(())
    count = rng.randint(1, m + 2)
    generators = []
    for _ in range(count):
        mask = rng.randrange(1, 1 << m)
        generators.append((Bundle(mask), Fraction(rng.randint(1, 8))))
    return SparseClosure(tuple(generators))


def random_table(rng: random.Random, m: int) -> FullTable:
    # monotone by construction: each entry tops its largest subentry
    values = [Fraction(0)] * (1 << m)
    for mask in range(1, 1 << m):
        floor = max(values[mask & ~(1 << j)] for j in Bundle(mask))
        values[mask] = floor + Fraction(rng.randint(0, 3))
    return FullTable(tuple(values))


def random_valuation(rng: random.Random, m: int, kinds=("additive", "closure")):
    kind = rng.choice(kinds)
    if kind == "additive":
        return random_additive(rng, m)
    if kind == "closure":
        return random_closure(rng, m)
    return random_table(rng, m)


def random_instance(rng: random.Random, n: int, m: int, kinds=("additive", "closure")) -> Instance:
    return validate_instance(
        item_names(m), tuple(random_valuation(rng, m, kinds) for _ in range(n))
    )


def random_two_valuation_instance(
    rng: random.Random, n: int, m: int, kinds=("additive", "closure", "table")
) -> tuple[Instance, Grouping]:
    v_a = random_valuation(rng, m, kinds)
    v_b = random_valuation(rng, m, kinds)
    group_a = {rng.randrange(n)}
    group_b = {rng.choice([i for i in range(n) if i not in group_a])}
    for i in range(n):
        if i in group_a or i in group_b:
            continue
        (group_a if rng.random() < 0.5 else group_b).add(i)
    valuations = tuple(v_a if i in group_a else v_b for i in range(n))
    inst = validate_instance(item_names(m), valuations)
    return inst, Grouping(tuple(sorted(group_a)), tuple(sorted(group_b)))


def random_allocation(rng: random.Random, inst: Instance, pool_bias: float = 0.3) -> Allocation:
    """Random partial allocation; each item lands in the pool with the given bias."""
    bundles = [Bundle(0)] * inst.n
    for j in range(inst.m):
        if rng.random() >= pool_bias:
            agent = rng.randrange(inst.n)
            bundles[agent] = bundles[agent].add(j)
    return make_allocation(inst, bundles)


_FIXTURES = pathlib.Path(__file__).parent / "data" / "step_fixtures.json"


def load_step_fixture(name: str) -> tuple[Instance, Allocation]:
    """Frozen (instance, allocation) pair that drives a specific solver case."""
    from efx.cli import parse_allocation, parse_instance

    data = json.loads(_FIXTURES.read_text())[name]
    inst, _ = parse_instance(data["instance"])
    return inst, parse_allocation(data["allocation"], inst)
