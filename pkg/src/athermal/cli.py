"""Command-line front end and bit-exact serialization.

All reports are JSON with sorted keys (byte-identical across runs for
identical configurations); sweep grids are CSV with a fixed header.  Exit
codes: 0 success, 1 internal error, 2 domain error (e.g. a free target).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DensityMatrix,
    FreeTargetError,
    Hamiltonian,
    gibbs_state,
    interconversion_rate,
    relative_entropy,
)
from .coherent import shift_overlap
from .distill import DistillationPlan, PerTypeRecord, plan_distillation, rate_limit
from .form import (
    BirkhoffPartition,
    BirkhoffSpan,
    FormationPlan,
    FormationRecord,
    plan_formation,
)
from .simulate import (
    StringDistribution,
    execute_plan_classical,
    execute_plan_quantum,
    exhaust_analysis,
    thermal_input_distribution,
)

__all__ = [
    "RunConfig",
    "SCHEMA_VERSION",
    "SWEEP_HEADER",
    "main",
    "plan_to_dict",
    "plan_from_dict",
    "dumps_report",
    "write_string_distribution_csv",
    "read_string_distribution_csv",
]

SCHEMA_VERSION = 1
SWEEP_HEADER = "n,ell,m,rate,deficit,failure_mass"


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one CLI invocation; identical configs give identical bytes."""

    command: str
    beta: float
    p: float | None = None
    n: int | None = None
    n_grid: tuple[int, ...] = ()
    width: float = 3.0
    seed: int = 0
    output: str | None = None

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in asdict(self).items()}


def dumps_report(report: dict) -> str:
    """Deterministic JSON encoding (sorted keys, exact float repr)."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def plan_to_dict(plan: DistillationPlan | FormationPlan) -> dict:
    if isinstance(plan, DistillationPlan):
        return _distillation_to_dict(plan)
    return _formation_to_dict(plan)


def _record_to_list(rec: PerTypeRecord) -> list:
    return [rec.gibbs_ones, rec.resource_ones, rec.exhaust_ones, rec.m,
            rec.log_input_cardinality, rec.log_exhaust_cardinality,
            rec.input_cardinality, rec.exhaust_cardinality]


def _distillation_to_dict(plan: DistillationPlan) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "distillation",
        "n": plan.n,
        "ell": plan.ell,
        "m": plan.m,
        "k": plan.k,
        "p": plan.p,
        "beta": plan.beta,
        "width": plan.width,
        "failure_mass": plan.failure_mass,
        "achieved_rate": plan.achieved_rate,
        "epsilon": plan.epsilon if math.isfinite(plan.epsilon) else None,
        "r_limit": plan.r_limit,
        "mode": plan.mode,
        "no_resource": plan.no_resource,
        "coherent": plan.coherent,
        "gibbs_window": list(plan.gibbs_window),
        "resource_window": list(plan.resource_window),
        "num_composite_types": plan.num_composite_types,
        "records_complete": plan.records_complete,
        "worst_type": _record_to_list(plan.worst_type) if plan.worst_type else None,
        "per_type_maps": [_record_to_list(r) for r in plan.per_type_maps],
        "units": {
            "beta": "1/E0",
            "achieved_rate": "dimensionless",
            "r_limit": "dimensionless",
            "failure_mass": "dimensionless",
            "log_cardinalities": "nats",
        },
    }


def _list_to_record(values: list) -> PerTypeRecord:
    return PerTypeRecord(*values)


def plan_from_dict(data: dict) -> DistillationPlan | FormationPlan:
    if data["kind"] == "distillation":
        return DistillationPlan(
            n=data["n"], ell=data["ell"], m=data["m"], k=data["k"],
            p=data["p"], beta=data["beta"], width=data["width"],
            per_type_maps=tuple(_list_to_record(r) for r in data["per_type_maps"]),
            failure_mass=data["failure_mass"],
            achieved_rate=data["achieved_rate"],
            epsilon=data["epsilon"] if data["epsilon"] is not None else math.inf,
            r_limit=data["r_limit"],
            mode=data["mode"],
            no_resource=data["no_resource"],
            coherent=data.get("coherent", False),
            worst_type=_list_to_record(data["worst_type"]) if data["worst_type"] else None,
            gibbs_window=tuple(data["gibbs_window"]),
            resource_window=tuple(data["resource_window"]),
            num_composite_types=data["num_composite_types"],
            records_complete=data["records_complete"],
        )
    if data["kind"] == "formation":
        birkhoff = data["birkhoff"]
        return FormationPlan(
            n=data["n"], ell=data["ell"], m=data["m"], k=data["k"],
            p=data["p"], beta=data["beta"], width=data["width"],
            register_bits=data["register_bits"],
            per_type_maps=tuple(
                FormationRecord(*r) for r in data["per_type_maps"]),
            birkhoff=BirkhoffPartition(
                ell=birkhoff["ell"],
                target_weights=tuple(birkhoff["target_weights"]),
                sets=tuple(tuple(BirkhoffSpan(*s) for s in spans)
                           for spans in birkhoff["sets"]),
                achieved_weights=tuple(birkhoff["achieved_weights"]),
                max_deviation=birkhoff["max_deviation"],
                tolerance=birkhoff["tolerance"],
                within_tolerance=birkhoff["within_tolerance"],
                grouped=birkhoff["grouped"],
            ),
            cost_rate=data["cost_rate"] if data["cost_rate"] is not None else math.inf,
            work_per_copy=data["work_per_copy"],
            failure_mass=data["failure_mass"],
            mode=data["mode"],
            free_target=data["free_target"],
            worst_type=FormationRecord(*data["worst_type"]) if data["worst_type"] else None,
            gibbs_window=tuple(data["gibbs_window"]),
            target_window=tuple(data["target_window"]),
            fixed_point_iterations=data["fixed_point_iterations"],
            records_complete=data["records_complete"],
        )
    raise ValueError(f"unknown plan kind {data['kind']!r}")


def _formation_record_to_list(rec: FormationRecord) -> list:
    return [rec.gibbs_ones, rec.target_ones, rec.exhaust_ones, rec.m,
            rec.log_gibbs_cardinality, rec.log_output_cardinality,
            rec.gibbs_cardinality, rec.output_cardinality]


def _formation_to_dict(plan: FormationPlan) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "formation",
        "n": plan.n,
        "ell": plan.ell,
        "m": plan.m,
        "k": plan.k,
        "p": plan.p,
        "beta": plan.beta,
        "width": plan.width,
        "register_bits": plan.register_bits,
        "cost_rate": plan.cost_rate if math.isfinite(plan.cost_rate) else None,
        "work_per_copy": plan.work_per_copy,
        "failure_mass": plan.failure_mass,
        "mode": plan.mode,
        "free_target": plan.free_target,
        "gibbs_window": list(plan.gibbs_window),
        "target_window": list(plan.target_window),
        "fixed_point_iterations": plan.fixed_point_iterations,
        "records_complete": plan.records_complete,
        "worst_type": _formation_record_to_list(plan.worst_type) if plan.worst_type else None,
        "per_type_maps": [_formation_record_to_list(r) for r in plan.per_type_maps],
        "birkhoff": {
            "ell": plan.birkhoff.ell,
            "target_weights": list(plan.birkhoff.target_weights),
            "achieved_weights": list(plan.birkhoff.achieved_weights),
            "max_deviation": plan.birkhoff.max_deviation,
            "tolerance": plan.birkhoff.tolerance,
            "within_tolerance": plan.birkhoff.within_tolerance,
            "grouped": plan.birkhoff.grouped,
            "sets": [[[s.ones, s.start, s.count] for s in spans]
                     for spans in plan.birkhoff.sets],
        },
        "units": {
            "beta": "1/E0",
            "work_per_copy": "E0 per copy",
            "cost_rate": "copies per E0",
            "failure_mass": "dimensionless",
            "log_cardinalities": "nats",
        },
    }


def write_string_distribution_csv(dist: StringDistribution, path: str) -> None:
    """Compact exact CSV: string, numerator, denominator."""
    lines = ["string,numerator,denominator"]
    for string in sorted(dist.probs):
        prob = dist.probs[string]
        frac = prob if isinstance(prob, Fraction) else Fraction(prob).limit_denominator(10 ** 15)
        text = "".join(str(b) for b in string)
        lines.append(f"{text},{frac.numerator},{frac.denominator}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_string_distribution_csv(path: str) -> StringDistribution:
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    if lines[0] != "string,numerator,denominator":
        raise ValueError("unexpected CSV header")
    probs = {}
    length = None
    for line in lines[1:]:
        text, num, den = line.split(",")
        bits = tuple(int(c) for c in text)
        length = len(bits) if length is None else length
        probs[bits] = Fraction(int(num), int(den))
    return StringDistribution(length, probs)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_rate(args) -> int:
    beta = args.beta
    p = args.p
    sigma_p = args.sigma_p
    h = Hamiltonian.two_level()
    gamma = gibbs_state(h, beta)
    closed = rate_limit(p, beta)
    rho = DensityMatrix.diagonal([1 - p, p])
    try:
        if sigma_p == 1.0:
            sigma = DensityMatrix.diagonal([0.0, 1.0])
            via_entropy = interconversion_rate(rho, sigma, gamma)
        else:
            sigma = DensityMatrix.diagonal([1 - sigma_p, sigma_p])
            via_entropy = interconversion_rate(rho, sigma, gamma)
            closed = (rate_limit(p, beta) / rate_limit(sigma_p, beta))
    except FreeTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    diff = abs(closed - via_entropy)
    print(f"closed_form_rate {closed!r} dimensionless")
    print(f"relative_entropy_rate {via_entropy!r} dimensionless")
    print(f"difference {diff!r}")
    if args.bits:
        d_rho = relative_entropy(rho, gamma.density_matrix())
        print(f"relative_entropy_nats {d_rho!r} nats")
        print(f"relative_entropy_bits {d_rho / math.log(2)!r} bits")
    return 0


def cmd_distill(args) -> int:
    plan = plan_distillation(args.n, args.p, args.beta, args.width)
    payload = dumps_report(plan_to_dict(plan))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    print(f"summary n={plan.n} ell={plan.ell} m={plan.m} rate={plan.achieved_rate!r} "
          f"r_limit={plan.r_limit!r} failure_mass={plan.failure_mass!r}")
    return 0


def cmd_form(args) -> int:
    plan = plan_formation(args.n, args.p, args.beta, args.width)
    payload = dumps_report(plan_to_dict(plan))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    print(f"summary n={plan.n} ell={plan.ell} m={plan.m} "
          f"work_per_copy={plan.work_per_copy!r} cost_rate={plan.cost_rate!r} "
          f"failure_mass={plan.failure_mass!r}")
    return 0


def sweep_rows(p: float, beta: float, n_grid, width: float) -> list[str]:
    rows = [SWEEP_HEADER]
    for n in n_grid:
        plan = plan_distillation(n, p, beta, width)
        deficit = plan.r_limit - plan.achieved_rate
        rows.append(f"{plan.n},{plan.ell},{plan.m},{plan.achieved_rate!r},"
                    f"{deficit!r},{plan.failure_mass!r}")
    return rows


def cmd_sweep(args) -> int:
    n_grid = [int(x) for x in args.n_grid.split(",")]
    rows = sweep_rows(args.p, args.beta, n_grid, args.width)
    payload = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    print(f"sweep schema_version={SCHEMA_VERSION} rows={len(rows) - 1} "
          f"units=rate:dimensionless,deficit:dimensionless")
    return 0


def cmd_simulate(args) -> int:
    plan = plan_distillation(args.n, args.p, args.beta, args.width)
    report = {
        "schema_version": SCHEMA_VERSION,
        "plan": {"n": plan.n, "ell": plan.ell, "m": plan.m, "k": plan.k},
        "units": {"work_trace_distance": "dimensionless"},
    }
    if plan.ell + plan.n <= args.max_qubits:
        channel = execute_plan_quantum(plan, max_qubits=args.max_qubits)
        report["quantum"] = {
            "commutator_nonzeros": channel.commutator_nonzeros,
            "trace_preserved": channel.trace_preserved,
            "work_trace_distance": channel.work_trace_distance,
            "failure_mass": channel.failure_mass,
        }
    execution = execute_plan_classical(plan, thermal_input_distribution(plan))
    success = execution.work_marginal.get((1,) * plan.m, 0)
    report["classical"] = {
        "work_register_success": float(success),
        "routed_failure_mass": float(execution.routed_failure_mass),
    }
    payload = dumps_report(report)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_exhaust(args) -> int:
    plan = plan_distillation(args.n, args.p, args.beta, args.width)
    report = exhaust_analysis(plan, block_size=args.block_size)
    payload = dumps_report({
        "schema_version": SCHEMA_VERSION,
        "block_size": report.block_size,
        "num_blocks": report.num_blocks,
        "rel_entropies": list(report.rel_entropies),
        "pinsker_bounds": list(report.pinsker_bounds),
        "measured_trace_distances": list(report.measured_trace_distances),
        "total_rel_entropy": report.total_rel_entropy,
        "per_system_rel_entropy": report.per_system_rel_entropy,
        "subadditivity_holds": report.subadditivity_holds,
        "units": {"rel_entropies": "nats", "trace_distances": "dimensionless"},
    })
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_frame(args) -> int:
    value = shift_overlap(args.N, args.delta)
    print(f"shift_overlap {value!r} dimensionless")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="athermal",
        description="Exact desk-scale protocols for the resource theory of athermal states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--beta", type=float, default=1.0, help="inverse temperature (1/E0)")
        p.add_argument("--width", type=float, default=3.0, help="typicality window width")
        p.add_argument("--seed", type=int, default=0, help="recorded RNG seed")
        p.add_argument("--output", type=str, default=None, help="output path")

    p_rate = sub.add_parser("rate", help="interconversion rate by both routes")
    p_rate.add_argument("--p", type=float, required=True)
    p_rate.add_argument("--sigma-p", type=float, default=1.0,
                        help="excited weight of the target state (default: pure excited)")
    p_rate.add_argument("--bits", action="store_true", help="also print bits")
    common(p_rate)
    p_rate.set_defaults(func=cmd_rate)

    p_d = sub.add_parser("distill", help="construct a distillation plan")
    p_d.add_argument("--n", type=int, required=True)
    p_d.add_argument("--p", type=float, required=True)
    common(p_d)
    p_d.set_defaults(func=cmd_distill)

    p_f = sub.add_parser("form", help="construct a formation plan")
    p_f.add_argument("--n", type=int, required=True)
    p_f.add_argument("--p", type=float, required=True)
    common(p_f)
    p_f.set_defaults(func=cmd_form)

    p_s = sub.add_parser("sweep", help="rate-convergence CSV over an n grid")
    p_s.add_argument("--n-grid", type=str, required=True, help="comma-separated n values")
    p_s.add_argument("--p", type=float, required=True)
    common(p_s)
    p_s.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="execute a small plan exactly")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=float, required=True)
    p_sim.add_argument("--max-qubits", type=int, default=14)
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ex = sub.add_parser("exhaust", help="exhaust-state structure report")
    p_ex.add_argument("--n", type=int, required=True)
    p_ex.add_argument("--p", type=float, required=True)
    p_ex.add_argument("--block-size", type=int, default=1)
    common(p_ex)
    p_ex.set_defaults(func=cmd_exhaust)

    p_fr = sub.add_parser("frame", help="reference-frame shift overlap")
    p_fr.add_argument("--N", type=int, required=True)
    p_fr.add_argument("--delta", type=int, required=True)
    p_fr.set_defaults(func=cmd_frame)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FreeTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
