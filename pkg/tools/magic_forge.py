#!/usr/bin/env python3
"""Command-line front end for the stabilizer, simulation and RAC pipelines.

Part of the `magic_forge` framework.

Subcommands:
- ``mub --dim D [--overlaps]``: MUB projectors and the exact overlap table
- ``gk-verify --partitions FILE [--samples N --seed S]``: classical
  shared-dit simulation of a stabilizer strategy, exact and sampled
- ``rac eval|optimize|uplift|region``: RAC strategies, optima, single-magic
  uplift and advantage regions on Bloch-ball slices
- ``clifford check --matrix FILE``: Clifford verdict and conjugation table
- ``magic --state FILE``: stabilizer-polytope certificate and l1 magic

Configuration precedence: defaults < ``--config`` JSON < environment
(``MAGIC_FORGE_TOL``, ``MAGIC_FORGE_EQ_TOL``, ``MAGIC_FORGE_BUDGET``) < flags.
Exit codes: 0 success, 1 verification failure / not Clifford, 2 invalid
input, 3 indeterminate Clifford verdict. Reports are written once, at the end.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

try:  # Local import when executed from repo root
    from channel_model import SpaceMismatchError, ValidationError, eval_quantum, strategy_from_json
    from classical_opt import DEFAULT_BUDGET, BudgetExceededError, classical_optimum, stabilizer_vertex_optimum
    from gk_simulator import PartitionError, correlation_grid, partitions_from_json, verify_sampled, verify_theorem1
    from hw_algebra import (
        DEFAULT_TOL,
        EQ_TOL,
        DimensionError,
        NotUnitaryError,
        Verdict,
        as_prime_dim,
        is_clifford,
        operator_from_json,
        operator_to_json,
    )
    from rac_lab import (
        RacCase,
        RacTask,
        StrategyTag,
        advantage_region,
        best_single_magic,
        case_decoding,
        default_decoding,
        rac2_magic_encodings,
        meid_report,
        nmq_report,
        optimal_uplift,
        optimize_unrestricted,
        rac2_strategy,
        rac3_case_strategies,
        rac_success,
        region_to_csv_rows,
        single_magic_uplift,
        uplift_gain,
        uplift_target,
    )
    from stab_mub import (
        BlochVector,
        PolytopeError,
        magic_l1,
        mub_operator_label,
        mub_projectors,
        overlap,
        polytope_membership,
        stabilizer_ids,
        state_from_json,
    )
except ImportError:  # pragma: no cover - fallback to package-style import
    from tools.channel_model import SpaceMismatchError, ValidationError, eval_quantum, strategy_from_json  # type: ignore
    from tools.classical_opt import DEFAULT_BUDGET, BudgetExceededError, classical_optimum, stabilizer_vertex_optimum  # type: ignore
    from tools.gk_simulator import PartitionError, correlation_grid, partitions_from_json, verify_sampled, verify_theorem1  # type: ignore
    from tools.hw_algebra import (  # type: ignore
        DEFAULT_TOL,
        EQ_TOL,
        DimensionError,
        NotUnitaryError,
        Verdict,
        as_prime_dim,
        is_clifford,
        operator_from_json,
        operator_to_json,
    )
    from tools.rac_lab import (  # type: ignore
        RacCase,
        RacTask,
        StrategyTag,
        advantage_region,
        best_single_magic,
        case_decoding,
        default_decoding,
        rac2_magic_encodings,
        meid_report,
        nmq_report,
        optimal_uplift,
        optimize_unrestricted,
        rac2_strategy,
        rac3_case_strategies,
        rac_success,
        region_to_csv_rows,
        single_magic_uplift,
        uplift_gain,
        uplift_target,
    )
    from tools.stab_mub import (  # type: ignore
        BlochVector,
        PolytopeError,
        magic_l1,
        mub_operator_label,
        mub_projectors,
        overlap,
        polytope_membership,
        stabilizer_ids,
        state_from_json,
    )

logger = logging.getLogger("magic_forge")

CONFIG_KEYS = ("tol", "eq_tol", "budget", "seed", "samples", "output", "format")
ENV_OVERRIDES = {
    "MAGIC_FORGE_TOL": ("tol", float),
    "MAGIC_FORGE_EQ_TOL": ("eq_tol", float),
    "MAGIC_FORGE_BUDGET": ("budget", int),
}
FORMATS = ("json", "csv")
CLIFFORD_EXIT = {Verdict.CLIFFORD: 0, Verdict.NOT_CLIFFORD: 1, Verdict.INDETERMINATE: 3}
RAC_STRATEGIES = ("meid", "onmq", "enmq", "rac2-magic", "case-i", "case-ii", "case-iii")
OPTIMIZE_TARGETS = ("quantum", "stabilizer", "classical", "single-magic")


class ConfigError(ValueError):
    """Raised for unusable configuration values or unknown config keys."""


@dataclass
class RunConfig:
    command: str
    subcommand: Optional[str] = None
    dim: Optional[int] = None
    seed: int = 0
    tol: float = DEFAULT_TOL
    eq_tol: float = EQ_TOL
    budget: int = DEFAULT_BUDGET
    samples: Optional[int] = None
    output: Optional[Path] = None
    format: Optional[str] = None
    verbose: bool = False

    def resolved_format(self, default: str = "json") -> str:
        return self.format or default


@dataclass
class CommandResult:
    payload: Dict[str, object]
    rows: List[List[str]] = field(default_factory=list)
    exit_code: int = 0
    default_format: str = "json"


def load_config_file(path: Path) -> Dict[str, object]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
    return data


def build_run_config(args: argparse.Namespace, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Merge defaults, config file, environment and flags, in that order."""
    environ = os.environ if environ is None else environ
    values: Dict[str, object] = {}
    if getattr(args, "config", None) is not None:
        values.update(load_config_file(args.config))
    for name, (key, cast) in ENV_OVERRIDES.items():
        raw = environ.get(name)
        if raw is None:
            continue
        try:
            values[key] = cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}={raw!r} is not a valid {cast.__name__}") from exc
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    config = RunConfig(
        command=args.command,
        subcommand=getattr(args, "action", None),
        dim=getattr(args, "dim", None),
        verbose=bool(getattr(args, "verbose", False)),
    )
    try:
        config.tol = float(values.get("tol", config.tol))
        config.eq_tol = float(values.get("eq_tol", config.eq_tol))
        config.budget = int(values.get("budget", config.budget))
        config.seed = int(values.get("seed", config.seed))
        samples = values.get("samples")
        config.samples = None if samples is None else int(samples)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid numeric configuration: {exc}") from exc
    output = values.get("output")
    config.output = Path(output) if output is not None else None
    config.format = values.get("format")  # type: ignore[assignment]

    if not config.tol > 0 or not config.eq_tol > 0:
        raise ConfigError("Tolerances must be positive")
    if config.budget < 1:
        raise ConfigError("Budget must be at least 1")
    if config.samples is not None and config.samples < 1:
        raise ConfigError("--samples must be at least 1")
    if config.format is not None and config.format not in FORMATS:
        raise ConfigError(f"Format must be one of {FORMATS}, got {config.format!r}")
    return config


def read_json(path: Path) -> Dict[str, object]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path} must hold a JSON object")
    return data


def render(result: CommandResult, fmt: str) -> str:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(result.rows)
        return buffer.getvalue()
    return json.dumps(result.payload, indent=2) + "\n"


def emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")


def cmd_mub(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    d = as_prime_dim(config.dim).d
    bases = []
    rows: List[List[str]] = [["k", "j", "vector_re", "vector_im"]]
    for basis in mub_projectors(d):
        label = mub_operator_label(d, basis.k)
        bases.append(
            {
                "k": basis.k,
                "operator": [label.a1, label.a2],
                "projectors": [operator_to_json(p) for p in basis.projectors],
            }
        )
        for j, vector in enumerate(basis.vectors):
            rows.append([str(basis.k), str(j), " ".join(f"{v:.12g}" for v in vector.real), " ".join(f"{v:.12g}" for v in vector.imag)])
    payload: Dict[str, object] = {"dim": d, "bases": bases}
    if args.overlaps:
        ids = stabilizer_ids(d)
        table = [[str(overlap(d, a, b)) for b in ids] for a in ids]
        payload["overlaps"] = {"labels": [str(sid) for sid in ids], "table": table}
        rows = [["state"] + [str(sid) for sid in ids]] + [[str(a)] + row for a, row in zip(ids, table)]
    return CommandResult(payload, rows)


def cmd_gk_verify(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    d, part_x, part_y = partitions_from_json(read_json(args.partitions))
    if config.dim is not None and as_prime_dim(config.dim).d != d:
        raise PartitionError(f"--dim {config.dim} disagrees with partition file dim {d}")
    report = verify_theorem1(part_x, part_y, d, tol=config.eq_tol)
    payload = report.to_dict()
    payload["table"] = correlation_grid(report.classical)
    passed = report.passed
    if config.samples is not None:
        sampled = verify_sampled(part_x, part_y, d, config.samples, config.seed)
        payload["sampled"] = sampled.to_dict()
        passed = passed and sampled.passed
    return CommandResult(payload, correlation_grid(report.classical), 0 if passed else 1)


def _strategy_report(args: argparse.Namespace, config: RunConfig):
    if args.strategy_file is not None:
        strategy = strategy_from_json(read_json(args.strategy_file), tol=config.tol)
        task = RacTask(len(strategy.spaces.Y))
        return rac_success(eval_quantum(strategy, exact=strategy.is_labelled), task)
    name = args.strategy
    if name == "meid":
        return meid_report(args.n)
    if name in ("onmq", "enmq"):
        report = nmq_report(args.n)
        if report.strategy_tag is not StrategyTag(name.upper()):
            raise ValueError(f"{name} is defined for {'odd' if name == 'onmq' else 'even'} N, got N={args.n}")
        return report
    if name == "rac2-magic":
        if args.n != 2:
            raise ValueError("The rac2-magic configuration is a 2->1 code; use --n 2")
        return rac2_strategy(rac2_magic_encodings())
    if args.n != 3:
        raise ValueError(f"{name} is a 3->1 decoding family; use --n 3")
    return rac3_case_strategies(name.split("-")[1].upper(), orientation=args.orientation)


def _report_rows(report) -> List[List[str]]:
    payload = report.to_dict()
    rows = [["x", "success"]] + [[x, v] for x, v in payload["per_string"].items()]
    rows.append(["average", payload["average_success"]])
    return rows


def cmd_rac(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    action = args.action
    if action == "eval":
        report = _strategy_report(args, config)
        return CommandResult(report.to_dict(), _report_rows(report))

    if action == "optimize":
        task = RacTask(args.n)
        decoding = case_decoding(args.case, args.orientation) if args.case else None
        if args.target == "classical":
            opt = classical_optimum(task, budget=config.budget, method=args.method)
            return CommandResult(opt.to_dict(), [["best_value"], [opt.to_dict()["best_value"]]])
        if args.target == "stabilizer":
            opt = stabilizer_vertex_optimum(task, decoding)
            return CommandResult(opt.to_dict(), [["best_value"], [opt.to_dict()["best_value"]]])
        if args.target == "single-magic":
            report = best_single_magic(task, decoding or default_decoding(task.N))
        else:
            report = optimize_unrestricted(task, decoding, refine_tol=config.eq_tol)
        return CommandResult(report.to_dict(), _report_rows(report))

    if action == "uplift":
        optimum = optimal_uplift(args.n, args.k)
        theta = optimum.theta if args.theta is None else args.theta
        bloch = BlochVector(math.sin(theta), 0.0, math.cos(theta))
        target = uplift_target(args.n, args.k, args.last_bit)
        report = single_magic_uplift(args.n, target, bloch)
        payload = report.to_dict()
        payload.update(
            {
                "theta": theta,
                "gain": uplift_gain(args.n, args.k, bloch, args.last_bit),
                "optimal_theta": optimum.theta,
                "optimal_gain": optimum.gain,
            }
        )
        return CommandResult(payload, _report_rows(report))

    samples = advantage_region(args.task, args.step, args.ny)
    counts: Dict[str, int] = {}
    for sample in samples:
        counts[sample.classification.value] = counts.get(sample.classification.value, 0) + 1
    payload = {
        "task": args.task,
        "step": args.step,
        "ny": args.ny,
        "counts": counts,
        "samples": [
            {"nx": s.nx, "nz": s.nz, "class": s.classification.value, "success": s.success} for s in samples
        ],
    }
    return CommandResult(payload, region_to_csv_rows(samples), default_format="csv")


def cmd_clifford(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    matrix = operator_from_json(read_json(args.matrix))
    verdict = is_clifford(matrix.shape[0], matrix, config.tol)
    payload = verdict.to_dict()
    rows = [["generator", "image", "phase_exp"]]
    for name, entry in (verdict.table or {}).items():
        rows.append([name, f"{entry.image.a1},{entry.image.a2}", str(entry.phase_exp)])
    rows.append(["verdict", verdict.verdict.value, ""])
    return CommandResult(payload, rows, CLIFFORD_EXIT[verdict.verdict])


def cmd_magic(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    rho = state_from_json(read_json(args.state), config.tol)
    d = rho.shape[0]
    if config.dim is not None and as_prime_dim(config.dim).d != d:
        raise DimensionError(f"--dim {config.dim} disagrees with state dimension {d}")
    certificate = polytope_membership(d, rho, config.tol)
    value = magic_l1(d, rho, config.tol)
    payload = {"dim": d, "certificate": certificate.to_dict(), "magic": value.to_dict()}
    rows = [["dim", "inside", "measure", "value"], [str(d), str(certificate.inside).lower(), value.measure_name, repr(value.value)]]
    return CommandResult(payload, rows)


HANDLERS = {
    "mub": cmd_mub,
    "gk-verify": cmd_gk_verify,
    "rac": cmd_rac,
    "clifford": cmd_clifford,
    "magic": cmd_magic,
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help=f"Verdict tolerance (default: {DEFAULT_TOL})")
    common.add_argument("--eq-tol", dest="eq_tol", type=float, help=f"Equality tolerance (default: {EQ_TOL})")
    common.add_argument("--budget", type=int, help=f"Classical enumeration budget (default: {DEFAULT_BUDGET})")
    common.add_argument("--seed", type=int, help="Seed for sampled paths (default: 0)")
    common.add_argument("--samples", type=int, help="Number of protocol rounds for sampled verification")
    common.add_argument("--output", "-o", type=Path, help="Write the report here instead of stdout")
    common.add_argument("--format", choices=FORMATS, help="Report format")
    common.add_argument("--config", type=Path, help="JSON file mirroring the flags above")
    common.add_argument("--verbose", action="store_true", help="Log solver steps to stderr")
    return common


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    common = _common_options()
    parser = argparse.ArgumentParser(description="Stabilizer simulation and magic-resource toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    mub = commands.add_parser("mub", parents=[common], help="MUB projectors and overlaps")
    mub.add_argument("--dim", type=int, required=True, help="Prime dimension")
    mub.add_argument("--overlaps", action="store_true", help="Include the exact overlap table")

    gk = commands.add_parser("gk-verify", parents=[common], help="Classical simulation of a stabilizer strategy")
    gk.add_argument("--partitions", type=Path, required=True, help="Partition JSON file")
    gk.add_argument("--dim", type=int, help="Expected dimension (checked against the file)")

    rac = commands.add_parser("rac", help="Random access code pipelines")
    actions = rac.add_subparsers(dest="action", required=True)
    rac_eval = actions.add_parser("eval", parents=[common], help="Evaluate a named or JSON strategy")
    rac_eval.add_argument("--n", type=int, default=2, help="Number of bits (default: 2)")
    source = rac_eval.add_mutually_exclusive_group(required=True)
    source.add_argument("--strategy", choices=RAC_STRATEGIES, help="Named strategy")
    source.add_argument("--strategy-file", type=Path, help="Strategy JSON file")
    rac_eval.add_argument("--orientation", choices=("x", "z"), default="x", help="Case III reused basis")

    rac_opt = actions.add_parser("optimize", parents=[common], help="Optimize encodings for fixed decodings")
    rac_opt.add_argument("--n", type=int, default=2, help="Number of bits (default: 2)")
    rac_opt.add_argument("--target", choices=OPTIMIZE_TARGETS, default="quantum", help="What to optimize over")
    rac_opt.add_argument("--case", choices=[c.value for c in RacCase], help="3->1 decoding family")
    rac_opt.add_argument("--orientation", choices=("x", "z"), default="x", help="Case III reused basis")
    rac_opt.add_argument("--method", choices=("exhaustive", "decomposed"), default="exhaustive", help="Classical search method")

    rac_up = actions.add_parser("uplift", parents=[common], help="Single-magic uplift of ONMQ/ENMQ")
    rac_up.add_argument("--n", type=int, required=True, help="Number of bits")
    rac_up.add_argument("--k", type=int, required=True, help="Majority excess of the target string")
    rac_up.add_argument("--theta", type=float, help="Rotation from Z towards X (default: optimal)")
    rac_up.add_argument("--last-bit", type=int, choices=(0, 1), default=0, help="Last bit of the target string")

    rac_region = actions.add_parser("region", parents=[common], help="Advantage region on a slice of the Bloch ball")
    rac_region.add_argument("--task", choices=("rac2", "rac3"), default="rac3", help="Which code")
    rac_region.add_argument("--step", type=float, default=0.01, help="Grid step (default: 0.01)")
    rac_region.add_argument("--ny", type=float, default=0.0, help="Fixed Y component of the slice (default: 0, the XZ plane)")

    clifford = commands.add_parser("clifford", help="Clifford checks")
    clifford_actions = clifford.add_subparsers(dest="action", required=True)
    check = clifford_actions.add_parser("check", parents=[common], help="Classify a unitary")
    check.add_argument("--matrix", type=Path, required=True, help="Dense operator JSON file")

    magic = commands.add_parser("magic", parents=[common], help="Polytope certificate and l1 magic of a state")
    magic.add_argument("--state", type=Path, required=True, help="Dense operator or Bloch JSON file")
    magic.add_argument("--dim", type=int, help="Expected dimension")

    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        config = build_run_config(args)
    except (ConfigError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    if config.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr, format="%(name)s: %(message)s")

    try:
        result = HANDLERS[args.command](args, config)
    except PolytopeError as exc:
        print(f"Verification failed: {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"Invalid strategy: {exc.invariant} ({exc})", file=sys.stderr)
        return 2
    except (DimensionError, NotUnitaryError, PartitionError, SpaceMismatchError, ValueError, KeyError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2

    emit(render(result, config.resolved_format(result.default_format)), config.output)
    logger.debug("%s finished with exit code %d", args.command, result.exit_code)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
