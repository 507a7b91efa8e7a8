"""Command-line interface and the JSON file formats.

Instance file::

    {"items": ["g1", ...],
     "agents": [{"name": "alice", "valuation": V}, ...]}

where V is one of::

    {"type": "additive", "weights": [3, "1/2", ...]}
    {"type": "table", "values": {"": 0, "g1": 2, "g1,g2": "5/2", ...}}
    {"type": "closure", "generators": [{"set": ["g1"], "value": 2}, ...]}

Numbers are integers or exact rational strings "p/q"; floats are rejected.
Table keys are comma-joined item names (sorted by item order on output; any
order is accepted on input) and every subset must appear exactly once.

Allocation file::

    {"bundles": [["g1"], ["g2", "g3"], ...], "pool": ["g4"]}

Exit codes: 0 success, 1 verification or validation failure, 2 precondition
error, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import charity, oracle, smallm, twoval
from .core import (
    Additive,
    Allocation,
    AllocationError,
    Bundle,
    EfxError,
    FullTable,
    GuardExceeded,
    Instance,
    PreconditionError,
    SparseClosure,
    ValidationError,
    check_allocation,
    make_allocation,
    validate_instance,
)
from .envy import build_graph, fairness_witness

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PRECONDITION = 2
EXIT_IO = 3

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?")


class ParseError(EfxError):
    pass


def parse_value(raw) -> Fraction:
    """Exact number from a JSON value: int, or a 'p/q' string."""
    if isinstance(raw, bool):
        raise ParseError(f"booleans are not numbers: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        raise ParseError(f"floats are rejected, use an exact rational string: {raw!r}")
    if isinstance(raw, str):
        if not _RATIONAL_RE.fullmatch(raw):
            raise ParseError(f"not an exact rational: {raw!r}")
        try:
            return Fraction(raw)
        except ZeroDivisionError:
            raise ParseError(f"zero denominator: {raw!r}") from None
    raise ParseError(f"not a number: {raw!r}")


def format_value(value: Fraction) -> object:
    return int(value) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _names_to_bundle(names: Sequence[str], index: dict[str, int], what: str) -> Bundle:
    mask = 0
    for name in names:
        if name not in index:
            raise ParseError(f"{what}: unknown item {name!r}")
        bit = 1 << index[name]
        if mask & bit:
            raise ParseError(f"{what}: duplicate item {name!r}")
        mask |= bit
    return Bundle(mask)


def parse_instance(data) -> tuple[Instance, list[str]]:
    """Instance plus agent names from a decoded instance file."""
    if not isinstance(data, dict) or "items" not in data or "agents" not in data:
        raise ParseError("instance file needs 'items' and 'agents'")
    items = data["items"]
    if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
        raise ParseError("'items' must be a list of item names")
    if len(set(items)) != len(items):
        raise ParseError("duplicate item names")
    index = {name: j for j, name in enumerate(items)}
    m = len(items)
    valuations = []
    agent_names = []
    for k, agent in enumerate(data["agents"]):
        if not isinstance(agent, dict) or "valuation" not in agent:
            raise ParseError(f"agent {k}: missing valuation")
        agent_names.append(str(agent.get("name", f"agent{k}")))
        valuations.append(_parse_valuation(agent["valuation"], index, m, k))
    instance = validate_instance(items, valuations)
    return instance, agent_names


def _parse_valuation(spec, index: dict[str, int], m: int, agent: int):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ParseError(f"agent {agent}: valuation needs a 'type'")
    kind = spec["type"]
    if kind == "additive":
        weights = spec.get("weights")
        if not isinstance(weights, list):
            raise ParseError(f"agent {agent}: additive valuation needs 'weights'")
        return Additive(tuple(parse_value(w) for w in weights))
    if kind == "table":
        table = spec.get("values")
        if not isinstance(table, dict):
            raise ParseError(f"agent {agent}: table valuation needs 'values'")
        if m > 20:
            raise ParseError(f"agent {agent}: table over {m} items exceeds the size guard")
        values: list[Optional[Fraction]] = [None] * (1 << m)
        for key, raw in table.items():
            names = [] if key == "" else key.split(",")
            bundle = _names_to_bundle(names, index, f"agent {agent} table key {key!r}")
            if values[bundle.mask] is not None:
                raise ParseError(f"agent {agent}: subset {key!r} listed twice")
            values[bundle.mask] = parse_value(raw)
        missing = next((mask for mask, v in enumerate(values) if v is None), None)
        if missing is not None:
            raise ParseError(
                f"agent {agent}: table is missing subset {{{_bundle_key(Bundle(missing), list(index))}}}"
            )
        return FullTable(tuple(values))
    if kind == "closure":
        generators = spec.get("generators")
        if not isinstance(generators, list):
            raise ParseError(f"agent {agent}: closure valuation needs 'generators'")
        pairs = []
        for gen in generators:
            if not isinstance(gen, dict) or "set" not in gen or "value" not in gen:
                raise ParseError(f"agent {agent}: generator needs 'set' and 'value'")
            bundle = _names_to_bundle(gen["set"], index, f"agent {agent} generator")
            pairs.append((bundle, parse_value(gen["value"])))
        return SparseClosure(tuple(pairs))
    raise ParseError(f"agent {agent}: unknown valuation type {kind!r}")


def _bundle_key(bundle: Bundle, items: Sequence[str]) -> str:
    return ",".join(items[j] for j in bundle)


def serialize_instance(inst: Instance, agent_names: Optional[Sequence[str]] = None) -> dict:
    if agent_names is None:
        agent_names = [f"agent{k}" for k in range(inst.n)]
    agents = []
    for name, valuation in zip(agent_names, inst.valuations):
        if isinstance(valuation, Additive):
            spec = {"type": "additive", "weights": [format_value(w) for w in valuation.weights]}
        elif isinstance(valuation, FullTable):
            spec = {
                "type": "table",
                "values": {
                    _bundle_key(Bundle(mask), inst.item_names): format_value(v)
                    for mask, v in enumerate(valuation.values)
                },
            }
        else:
            spec = {
                "type": "closure",
                "generators": [
                    {"set": [inst.item_names[j] for j in bundle], "value": format_value(w)}
                    for bundle, w in valuation.generators
                ],
            }
        agents.append({"name": name, "valuation": spec})
    return {"items": list(inst.item_names), "agents": agents}


def parse_allocation(data, inst: Instance) -> Allocation:
    if not isinstance(data, dict) or "bundles" not in data or "pool" not in data:
        raise ParseError("allocation file needs 'bundles' and 'pool'")
    index = {name: j for j, name in enumerate(inst.item_names)}
    bundles = data["bundles"]
    if not isinstance(bundles, list) or len(bundles) != inst.n:
        raise ParseError(f"allocation needs exactly {inst.n} bundles")
    parsed = [_names_to_bundle(b, index, f"bundle {k}") for k, b in enumerate(bundles)]
    pool = _names_to_bundle(data["pool"], index, "pool")
    allocation = Allocation(tuple(parsed), pool)
    try:
        check_allocation(inst, allocation)
    except AllocationError as exc:
        raise ParseError(f"inconsistent allocation: {exc}") from None
    return allocation


def serialize_allocation(allocation: Allocation, inst: Instance) -> dict:
    return {
        "bundles": [[inst.item_names[j] for j in b] for b in allocation.bundles],
        "pool": [inst.item_names[j] for j in allocation.pool],
    }


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _load_instance(path: str) -> tuple[Instance, list[str]]:
    return parse_instance(_load_json(path))


def _write_json(data, path: Optional[str]) -> None:
    text = json.dumps(data, indent=2)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")


def _write_trace(trace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for k, (label, vector) in enumerate(trace):
            values = ",".join(str(entry.value) for entry in vector.entries)
            handle.write(f"{k}\t({values})\t{label}\n")


def cmd_validate(args) -> int:
    instance, _ = _load_instance(args.instance)
    print(f"ok: {instance.n} agents, {instance.m} items")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance, _ = _load_instance(args.instance)
    mode = args.mode
    if mode == "auto":
        try:
            twoval.infer_grouping(instance)
            mode = "two-valuation"
        except PreconditionError:
            mode = "small-m" if instance.m <= instance.n + 3 else "charity"
    trace: Optional[list] = [] if args.trace else None
    if mode == "two-valuation":
        grouping = twoval.infer_grouping(instance)
        result = twoval.solve_twoval(instance, grouping, trace)
    elif mode == "small-m":
        result = smallm.solve_smallm(instance, trace)
    else:
        result = charity.solve_charity(instance, trace)
        if result.pool:
            print(
                f"note: charity mode left {len(result.pool)} item(s) unallocated "
                f"(at most n-2 = {max(0, instance.n - 2)}), none of them envied",
                file=sys.stderr,
            )
    _write_json(serialize_allocation(result, instance), args.output)
    if args.trace:
        _write_trace(trace, args.trace)
    return EXIT_OK


def cmd_verify(args) -> int:
    instance, _ = _load_instance(args.instance)
    allocation = parse_allocation(_load_json(args.allocation), instance)
    witness = fairness_witness(
        instance, allocation, level=args.level, perturbed=args.order == "perturbed"
    )
    if witness is None:
        print(f"pass: allocation is {args.level} under the {args.order} order")
        return EXIT_OK
    i, j, h = witness
    removed = "" if h is None else f" minus {instance.item_names[h]}"
    print(f"fail: agent {i} prefers bundle of agent {j}{removed} to her own")
    return EXIT_FAIL


def cmd_enumerate(args) -> int:
    instance, _ = _load_instance(args.instance)
    allocations = oracle.enumerate_complete_efx(instance)
    for allocation in allocations:
        print(json.dumps(serialize_allocation(allocation, instance)))
    print(f"# complete EFX allocations: {len(allocations)}")
    return EXIT_OK


def cmd_graph(args) -> int:
    instance, agent_names = _load_instance(args.instance)
    allocation = parse_allocation(_load_json(args.allocation), instance)
    graph = build_graph(instance, allocation)
    lines = ["digraph champion {"]
    for i, name in enumerate(agent_names):
        lines.append(f'  a{i} [label="{name}"];')
    for i, j in sorted(graph.envy_edges):
        lines.append(f"  a{i} -> a{j};")
    for i, j, g in sorted(graph.champion_edges):
        lines.append(f'  a{i} -> a{j} [label="{instance.item_names[g]}", style=dashed];')
    lines.append("}")
    text = "\n".join(lines)
    if args.output is None or args.output == "-":
        print(text)
    else:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    return EXIT_OK


def cmd_counterexample(args) -> int:
    instance = oracle.counterexample_instance()
    _write_json(serialize_instance(instance, ["a1", "a2", "a3"]), args.output)
    report = oracle.verify_counterexample()
    baseline = oracle.counterexample_baseline(instance)
    print(f"inequalities and table entries checked: {report.inequalities_checked}")
    print(f"baseline allocation: {serialize_allocation(baseline, instance)}")
    print(f"agent a1 baseline value: {report.baseline_value}")
    print(f"complete EFX allocations: {report.complete_efx_count}")
    print(f"best agent-a1 value among them: {report.max_complete_value}")
    print("pass: every complete EFX allocation leaves agent a1 strictly below the baseline")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efx",
        description="Exact-arithmetic EFX allocation solvers and verifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("-o", "--output", default=None, help="allocation file (default: stdout)")
    p.add_argument(
        "--mode",
        choices=["auto", "charity", "two-valuation", "small-m"],
        default="auto",
    )
    p.add_argument("--trace", default=None, help="write the per-iteration trace to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="verify an allocation against an instance")
    p.add_argument("instance")
    p.add_argument("allocation")
    p.add_argument("--level", choices=["efx", "ef1", "envy-free"], default="efx")
    p.add_argument("--order", choices=["perturbed", "raw"], default="perturbed")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate", help="list all complete EFX allocations")
    p.add_argument("instance")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("graph", help="export the champion graph as DOT")
    p.add_argument("instance")
    p.add_argument("allocation")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser(
        "counterexample",
        help="write the three-agent counterexample instance and verify it",
    )
    p.add_argument("output", nargs="?", default="counterexample.json")
    p.set_defaults(func=cmd_counterexample)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PreconditionError, GuardExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except EfxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
