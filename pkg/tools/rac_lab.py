"""Random access codes for qubits: named strategies, single-magic uplift, advantage regions.

Part of the `magic_forge` framework.

An N->1 RAC gives Alice a bit string x, sends one qubit (or one bit) and asks
Bob for the bit x_y. With Bob measuring Pauli bases, every encoding enters the
average success linearly:

    success = 1/2 + sum_x c_x . n_x / (2^(N+1) N),   c_x = sum_y (-1)^(x_y) e_axis(y)

and every closed form below is an instance of that identity. Named strategies:
- MEID (majority encoding, identity decoding) for the classical one-bit code
- ONMQ / ENMQ, the stabilizer strategies matching MEID for odd / even N
- the 3->1 decoding families (one reused basis, three bases, two plus one)

Region samples serialize as CSV ``nx,nz,class,success``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

try:  # Local import when executed from repo root
    from channel_model import (
        ClassicalPureStrategy,
        Correlation,
        FunctionTask,
        Probability,
        QuantumStrategy,
        TaskSpaces,
        ValidationError,
        eval_classical,
        eval_quantum,
        format_probability,
        mub_povm,
        require_same_spaces,
        task_success,
    )
    from hw_algebra import EQ_TOL
    from stab_mub import (
        BLOCH_NORM_SLACK,
        QUBIT_AXIS,
        BlochVector,
        StabilizerStateId,
        magic_l1,
        stabilizer_ids,
        stabilizer_state,
    )
except ImportError:  # pragma: no cover - fallback to package-style import
    from tools.channel_model import (  # type: ignore
        ClassicalPureStrategy,
        Correlation,
        FunctionTask,
        Probability,
        QuantumStrategy,
        TaskSpaces,
        ValidationError,
        eval_classical,
        eval_quantum,
        format_probability,
        mub_povm,
        require_same_spaces,
        task_success,
    )
    from tools.hw_algebra import EQ_TOL  # type: ignore
    from tools.stab_mub import (  # type: ignore
        BLOCH_NORM_SLACK,
        QUBIT_AXIS,
        BlochVector,
        StabilizerStateId,
        magic_l1,
        stabilizer_ids,
        stabilizer_state,
    )

logger = logging.getLogger(__name__)

BITS = (0, 1)
CLASSICAL_THRESHOLD = Fraction(3, 4)
DEFAULT_GRID_STEP = 0.01
BOUNDARY_BAND = 1e-8
CLOSED_FORM_TOL = 1e-12
BASIS_NAMES = {1: "Z", 2: "X", 3: "Y"}

# y -> MUB index (1 = Z, 2 = X, 3 = Y)
Decoding = Dict[int, int]
RAC2_DECODING: Decoding = {1: 1, 2: 2}


class StrategyTag(str, Enum):
    MEID = "MEID"
    ONMQ = "ONMQ"
    ENMQ = "ENMQ"
    CASE_I = "CASE_I"
    CASE_II = "CASE_II"
    CASE_III = "CASE_III"
    CUSTOM = "CUSTOM"


class RacCase(str, Enum):
    I = "I"
    II = "II"
    III = "III"


class RegionClass(str, Enum):
    STABILIZER = "stabilizer"
    BOUNDARY = "boundary"
    MAGIC_ADVANTAGE = "magic-advantage"
    MAGIC_NO_ADVANTAGE = "magic-no-advantage"


@dataclass(frozen=True)
class RacTask:
    """N bits for Alice, an index y in 1..N for Bob, target b = x_y."""

    N: int

    def __post_init__(self) -> None:
        if isinstance(self.N, bool) or not isinstance(self.N, int) or self.N < 1:
            raise ValueError(f"RAC length must be a positive integer, got {self.N!r}")

    @cached_property
    def strings(self) -> Tuple[str, ...]:
        return tuple("".join(bits) for bits in product("01", repeat=self.N))

    @cached_property
    def spaces(self) -> TaskSpaces:
        return TaskSpaces(self.strings, tuple(range(1, self.N + 1)), BITS, 2)

    def target(self, x: str, y: int) -> int:
        return int(x[y - 1])

    def to_function_task(self) -> FunctionTask:
        return FunctionTask(self.spaces, {(x, y): self.target(x, y) for x in self.strings for y in self.spaces.Y})


@dataclass
class StrategyReport:
    average_success: Probability
    per_string: Dict[str, Probability]
    strategy_tag: StrategyTag = StrategyTag.CUSTOM
    closed_form: Optional[float] = None
    magic: Dict[str, float] = field(default_factory=dict)
    plane_excess: Dict[str, float] = field(default_factory=dict)
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return isinstance(self.average_success, Fraction)

    def recomputed_average(self) -> Probability:
        values = list(self.per_string.values())
        if all(isinstance(v, Fraction) for v in values):
            return sum(values, Fraction(0)) / len(values)
        return sum(float(v) for v in values) / len(values)

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "strategy_tag": self.strategy_tag.value,
            "average_success": format_probability(self.average_success),
            "per_string": {x: format_probability(v) for x, v in self.per_string.items()},
        }
        if self.closed_form is not None:
            data["closed_form"] = self.closed_form
        if self.magic:
            data["magic_l1"] = self.magic
            data["plane_excess"] = self.plane_excess
        for key, value in self.details.items():
            data[key] = format_probability(value) if isinstance(value, Fraction) else value
        return data


@dataclass(frozen=True)
class RegionSample:
    nx: float
    nz: float
    classification: RegionClass
    success: float
    ny: float = 0.0

    def to_row(self) -> List[str]:
        return [f"{self.nx:.6f}", f"{self.nz:.6f}", self.classification.value, f"{self.success:.12f}"]


def majority(bits: str) -> int:
    """1 only when ones strictly outnumber zeros; ties go to 0."""
    ones = bits.count("1")
    return 1 if ones > len(bits) - ones else 0


def rac_success(corr: Correlation, task: RacTask, tag: StrategyTag = StrategyTag.CUSTOM) -> StrategyReport:
    require_same_spaces(corr.spaces, task.spaces, "rac_success")
    per_string: Dict[str, Probability] = {}
    for x in task.strings:
        hits = [corr.p(task.target(x, y), x, y) for y in task.spaces.Y]
        if corr.exact:
            per_string[x] = sum((Fraction(h) for h in hits), Fraction(0)) / task.N
        else:
            per_string[x] = sum(float(h) for h in hits) / task.N
    return StrategyReport(task_success(corr, task), per_string, tag)


def meid_strategy(N: int) -> ClassicalPureStrategy:
    task = RacTask(N)
    return ClassicalPureStrategy(
        task.spaces,
        {x: majority(x) for x in task.strings},
        {y: BITS for y in task.spaces.Y},
    )


def meid_report(N: int) -> StrategyReport:
    task = RacTask(N)
    return rac_success(eval_classical(meid_strategy(N)), task, StrategyTag.MEID)


def labelled_strategy(task: RacTask, encoding: Mapping[str, StabilizerStateId], decoding: Mapping[int, int]) -> QuantumStrategy:
    """Stabilizer encodings and MUB decodings, outcome j read as bit j."""
    return QuantumStrategy(
        task.spaces,
        encode={x: stabilizer_state(2, sid) for x, sid in encoding.items()},
        decode={y: mub_povm(2, decoding[y]) for y in task.spaces.Y},
        post={y: BITS for y in task.spaces.Y},
        stabilizer_encoding=dict(encoding),
        mub_decoding=dict(decoding),
    )


def _nmq_decoding(N: int) -> Decoding:
    decoding = {y: 1 for y in range(1, N)}
    decoding[N] = 2
    return decoding


def onmq_strategy(N: int) -> QuantumStrategy:
    """Z eigenstate of the unique majority of the first 2n bits, else X eigenstate of the last bit."""
    if N % 2 == 0:
        raise ValueError(f"ONMQ needs odd N, got {N}; use enmq_strategy")
    task = RacTask(N)
    encoding: Dict[str, StabilizerStateId] = {}
    for x in task.strings:
        head = x[:-1]
        ones = head.count("1")
        if 2 * ones == len(head):
            encoding[x] = StabilizerStateId(2, int(x[-1]))
        else:
            encoding[x] = StabilizerStateId(1, majority(head))
    return labelled_strategy(task, encoding, _nmq_decoding(N))


def enmq_strategy(N: int) -> QuantumStrategy:
    """Z eigenstate of the majority of the first 2n-1 bits (always unique)."""
    if N % 2 == 1:
        raise ValueError(f"ENMQ needs even N, got {N}; use onmq_strategy")
    task = RacTask(N)
    encoding = {x: StabilizerStateId(1, majority(x[:-1])) for x in task.strings}
    return labelled_strategy(task, encoding, _nmq_decoding(N))


def nmq_strategy(N: int) -> Tuple[QuantumStrategy, StrategyTag]:
    if N % 2:
        return onmq_strategy(N), StrategyTag.ONMQ
    return enmq_strategy(N), StrategyTag.ENMQ


def nmq_report(N: int) -> StrategyReport:
    strategy, tag = nmq_strategy(N)
    return rac_success(eval_quantum(strategy, exact=True), RacTask(N), tag)


def success_coefficients(task: RacTask, decoding: Mapping[int, int]) -> Dict[str, np.ndarray]:
    """c_x = sum_y (-1)^(x_y) e_axis(y) for Pauli-basis decodings."""
    coefficients: Dict[str, np.ndarray] = {}
    for x in task.strings:
        c = np.zeros(3)
        for y in task.spaces.Y:
            c[QUBIT_AXIS[decoding[y]]] += (-1) ** task.target(x, y)
        coefficients[x] = c
    return coefficients


def _normalizer(task: RacTask) -> int:
    return 2 ** (task.N + 1) * task.N


def linear_success(task: RacTask, decoding: Mapping[int, int], encodings: Mapping[str, BlochVector]) -> float:
    coefficients = success_coefficients(task, decoding)
    total = sum(float(coefficients[x] @ encodings[x].as_array()) for x in task.strings)
    return 0.5 + total / _normalizer(task)


def stabilizer_value(c: np.ndarray) -> int:
    """Best c . v over the six qubit stabilizer vertices."""
    return int(round(float(np.abs(c).max())))


def stabilizer_optimal_encodings(task: RacTask, decoding: Mapping[int, int]) -> Dict[str, StabilizerStateId]:
    """Per string, the first vertex (in id order) maximizing c_x . v."""
    coefficients = success_coefficients(task, decoding)
    vertices = [(sid, BlochVector.vertex(sid).as_array()) for sid in stabilizer_ids(2)]
    return {x: max(vertices, key=lambda item: float(coefficients[x] @ item[1]))[0] for x in task.strings}


def bloch_strategy(task: RacTask, encodings: Mapping[str, BlochVector], decoding: Mapping[int, int]) -> QuantumStrategy:
    labels = {x: encodings[x].stabilizer_id() for x in task.strings}
    labelled = all(sid is not None for sid in labels.values())
    return QuantumStrategy(
        task.spaces,
        encode={x: encodings[x].density() for x in task.strings},
        decode={y: mub_povm(2, decoding[y]) for y in task.spaces.Y},
        post={y: BITS for y in task.spaces.Y},
        stabilizer_encoding=labels if labelled else None,
        mub_decoding=dict(decoding) if labelled else None,
    )


def evaluate_bloch_strategy(
    task: RacTask,
    encodings: Mapping[str, BlochVector],
    decoding: Mapping[int, int],
    tag: StrategyTag = StrategyTag.CUSTOM,
) -> StrategyReport:
    """Born-rule evaluation (exact when every encoding is a vertex) checked against the linear form."""
    strategy = bloch_strategy(task, encodings, decoding)
    report = rac_success(eval_quantum(strategy, exact=strategy.is_labelled), task, tag)
    closed = linear_success(task, decoding, encodings)
    disagreement = abs(closed - float(report.average_success))
    if disagreement > CLOSED_FORM_TOL:
        raise ValidationError("closed form disagrees with Born rule", disagreement, tag.value)
    report.closed_form = closed
    for x in task.strings:
        value = magic_l1(2, encodings[x].density()).value
        if value > EQ_TOL:
            report.magic[x] = value
            report.plane_excess[x] = encodings[x].plane_excess
    report.details["decoding"] = {str(y): BASIS_NAMES[k] for y, k in decoding.items()}
    return report


def _as_encodings(task: RacTask, encodings: Union[Mapping[str, object], Sequence[object]]) -> Dict[str, BlochVector]:
    if not isinstance(encodings, Mapping):
        encodings = dict(zip(task.strings, encodings))
    parsed: Dict[str, BlochVector] = {}
    for x in task.strings:
        if x not in encodings:
            raise ValidationError("encoding not total on X", subject=f"x={x!r}")
        value = encodings[x]
        parsed[x] = value if isinstance(value, BlochVector) else BlochVector.from_sequence(value)
    return parsed


def rac2_strategy(encodings: Union[Mapping[str, object], Sequence[object]]) -> StrategyReport:
    """2->1 RAC with y=1 measured in Z and y=2 in X."""
    task = RacTask(2)
    return evaluate_bloch_strategy(task, _as_encodings(task, encodings), RAC2_DECODING)


def rac2_magic_encodings() -> Dict[str, BlochVector]:
    """One XZ-plane magic state at 45 degrees for 00, the optimal vertices elsewhere."""
    root = 1 / math.sqrt(2)
    return {
        "00": BlochVector(root, 0.0, root),
        "01": BlochVector.vertex(StabilizerStateId(1, 0)),
        "10": BlochVector.vertex(StabilizerStateId(2, 0)),
        "11": BlochVector.vertex(StabilizerStateId(1, 1)),
    }


def case_decoding(case: Union[RacCase, str], orientation: str = "x") -> Decoding:
    """Case I reuses X, Case II uses Z/X/Y, Case III reuses one basis for y in {1,2}."""
    case = RacCase(case)
    if case is RacCase.I:
        return {1: 2, 2: 2, 3: 2}
    if case is RacCase.II:
        return {1: 1, 2: 2, 3: 3}
    if orientation == "x":
        return {1: 2, 2: 2, 3: 1}
    if orientation == "z":
        return {1: 1, 2: 1, 3: 2}
    raise ValueError(f"Case III orientation must be 'x' or 'z', got {orientation!r}")


CASE_TAGS = {RacCase.I: StrategyTag.CASE_I, RacCase.II: StrategyTag.CASE_II, RacCase.III: StrategyTag.CASE_III}


def rac3_case_strategies(
    case: Union[RacCase, str],
    encodings: Optional[Union[Mapping[str, object], Sequence[object]]] = None,
    orientation: str = "x",
) -> StrategyReport:
    """3->1 RAC under one decoding family; default encodings are the best vertices."""
    case = RacCase(case)
    task = RacTask(3)
    decoding = case_decoding(case, orientation)
    if encodings is None:
        if case is RacCase.I:
            chosen = {x: BlochVector.vertex(StabilizerStateId(2, majority(x))) for x in task.strings}
        else:
            chosen = {x: BlochVector.vertex(sid) for x, sid in stabilizer_optimal_encodings(task, decoding).items()}
    else:
        chosen = _as_encodings(task, encodings)
    return evaluate_bloch_strategy(task, chosen, decoding, CASE_TAGS[case])


def _direction(angles: np.ndarray) -> np.ndarray:
    theta, phi = angles
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _optimize_direction(c: np.ndarray, grid: int = 12, refine_tol: float = 1e-10) -> BlochVector:
    """Maximize c . n over the Bloch sphere: coarse angle grid, then Nelder-Mead."""
    best = None
    for theta in np.linspace(0.0, math.pi, grid + 1):
        for phi in np.linspace(0.0, 2 * math.pi, 2 * grid, endpoint=False):
            value = float(c @ _direction(np.array([theta, phi])))
            if best is None or value > best[0]:
                best = (value, np.array([theta, phi]))
    result = minimize(
        lambda angles: -float(c @ _direction(angles)),
        best[1],
        method="Nelder-Mead",
        options={"xatol": refine_tol, "fatol": refine_tol, "maxiter": 4000},
    )
    angles = result.x if -result.fun >= best[0] else best[1]
    n = _direction(angles)
    logger.debug("direction refinement: %s -> %.12f", result.message, float(c @ n))
    return BlochVector(*(float(v) for v in n / max(1.0, float(np.linalg.norm(n)))))


def best_single_magic(task: RacTask, decoding: Mapping[int, int], tag: StrategyTag = StrategyTag.CUSTOM) -> StrategyReport:
    """One string gets an optimized pure state, the rest keep their best vertices."""
    coefficients = success_coefficients(task, decoding)
    encodings = {x: BlochVector.vertex(sid) for x, sid in stabilizer_optimal_encodings(task, decoding).items()}
    bonuses = {x: float(np.linalg.norm(c)) - stabilizer_value(c) for x, c in coefficients.items()}
    magic_string = max(task.strings, key=lambda x: bonuses[x])
    encodings[magic_string] = _optimize_direction(coefficients[magic_string])
    report = evaluate_bloch_strategy(task, encodings, decoding, tag)
    stabilizer_total = sum(stabilizer_value(c) for c in coefficients.values())
    analytic = 0.5 + (stabilizer_total + bonuses[magic_string]) / _normalizer(task)
    report.details.update(
        {
            "magic_string": magic_string,
            "analytic_optimum": analytic,
            "gap": analytic - float(report.average_success),
        }
    )
    return report


def default_decoding(N: int) -> Decoding:
    if N == 2:
        return dict(RAC2_DECODING)
    if N == 3:
        return case_decoding(RacCase.II)
    raise ValueError(f"Unrestricted optimization is set up for N in {{2, 3}}, got {N}")


def optimize_unrestricted(
    task: RacTask,
    decoding: Optional[Mapping[int, int]] = None,
    refine_tol: float = 1e-10,
    stabilizer_only: bool = False,
) -> StrategyReport:
    """Per-string maximization of c_x . n_x; reports the gap to sum |c_x| (or the vertex optimum)."""
    decoding = dict(decoding or default_decoding(task.N))
    coefficients = success_coefficients(task, decoding)
    if stabilizer_only:
        encodings = {x: BlochVector.vertex(sid) for x, sid in stabilizer_optimal_encodings(task, decoding).items()}
        known: Probability = Fraction(1, 2) + Fraction(
            sum(stabilizer_value(c) for c in coefficients.values()), _normalizer(task)
        )
    else:
        encodings = {x: _optimize_direction(c, refine_tol=refine_tol) for x, c in coefficients.items()}
        known = 0.5 + sum(float(np.linalg.norm(c)) for c in coefficients.values()) / _normalizer(task)
    report = evaluate_bloch_strategy(task, encodings, decoding)
    gap = known - report.average_success if isinstance(known, Fraction) and report.exact else float(known) - float(report.average_success)
    report.details.update({"known_optimum": known, "gap": gap, "stabilizer_only": stabilizer_only})
    logger.debug("N=%d unrestricted=%s gap %s", task.N, not stabilizer_only, gap)
    return report


@dataclass(frozen=True)
class UpliftOptimum:
    theta: float
    gain: float


def _uplift_shape(N: int) -> Tuple[int, int]:
    """(n, length of the majority-deciding prefix)."""
    if N % 2:
        return (N - 1) // 2, N - 1
    return N // 2, N - 1


def _prefix_weight(N: int, k: int) -> int:
    """|sum of (-1)^(x_y) over the prefix|: 2k for odd N, 2k+1 for even N."""
    return 2 * k if N % 2 else 2 * k + 1


def _check_k(N: int, k: int) -> None:
    n, _ = _uplift_shape(N)
    low, high = (1, n) if N % 2 else (0, n - 1)
    if not low <= k <= high:
        raise ValueError(f"k={k} outside {low}..{high} for N={N}")


def uplift_target(N: int, k: int, last_bit: int = 0) -> str:
    """Canonical string with n+k zeros leading the prefix."""
    _check_k(N, k)
    n, prefix = _uplift_shape(N)
    return "0" * (n + k) + "1" * (prefix - n - k) + str(last_bit)


def uplift_formula(N: int, k: int, bloch: BlochVector, last_bit: int = 0, eta: int = 0) -> float:
    """Per-string success (N + m (-1)^eta r_z + (-1)^last r_x) / (2N), m the prefix weight."""
    m = _prefix_weight(N, k)
    return (N + m * (-1) ** eta * bloch.nz + (-1) ** last_bit * bloch.nx) / (2 * N)


def uplift_gain(N: int, k: int, bloch: BlochVector, last_bit: int = 0, eta: int = 0) -> float:
    """Gain over the Z eigenstate, in units of 1/(2N) per string."""
    m = _prefix_weight(N, k)
    return m * (-1) ** eta * bloch.nz + (-1) ** last_bit * bloch.nx - m


def optimal_uplift(N: int, k: int) -> UpliftOptimum:
    _check_k(N, k)
    m = _prefix_weight(N, k)
    return UpliftOptimum(math.atan(1 / m) if m else math.pi / 2, math.sqrt(m * m + 1) - m)


def _prefix_profile(x: str) -> Tuple[int, int, int]:
    """(k, eta, last bit) of a string relative to the majority of its prefix."""
    prefix = x[:-1]
    ones = prefix.count("1")
    zeros = len(prefix) - ones
    eta = 1 if ones > zeros else 0
    n = len(x) // 2 if len(x) % 2 == 0 else (len(x) - 1) // 2
    k = max(zeros, ones) - n
    return k, eta, int(x[-1])


def _signed_prefix(x: str) -> int:
    return sum((-1) ** int(bit) for bit in x[:-1])


def single_magic_uplift(
    N: int,
    target: str,
    bloch: Union[BlochVector, Sequence[float]],
    base: Optional[Union[StrategyTag, str]] = None,
) -> StrategyReport:
    """Replace the ONMQ/ENMQ encoding of one string by an arbitrary Bloch state."""
    task = RacTask(N)
    strategy, tag = nmq_strategy(N)
    if base is not None and StrategyTag(base) is not tag:
        raise ValueError(f"N={N} pairs with {tag.value}, not {StrategyTag(base).value}")
    if target not in task.strings:
        raise ValueError(f"Target {target!r} is not an {N}-bit string")
    state = bloch if isinstance(bloch, BlochVector) else BlochVector.from_sequence(bloch)
    encodings = {x: BlochVector.vertex(sid) for x, sid in strategy.stabilizer_encoding.items()}
    encodings[target] = state
    report = evaluate_bloch_strategy(task, encodings, strategy.mub_decoding, tag)

    k, eta, last = _prefix_profile(target)
    base_report = nmq_report(N)
    meid_average = meid_report(N).average_success
    formula = (N + _signed_prefix(target) * state.nz + (-1) ** last * state.nx) / (2 * N)
    report.details.update(
        {
            "target": target,
            "k": k,
            "eta": eta,
            "formula": formula,
            "target_success": float(report.per_string[target]),
            "base_average": base_report.average_success,
            "meid_average": meid_average,
            "improvement": float(report.average_success) - float(meid_average),
        }
    )
    return report


def region_decodings(task_name: str) -> List[Decoding]:
    if task_name == "rac2":
        return [dict(RAC2_DECODING)]
    if task_name == "rac3":
        return [case_decoding(RacCase.III, "x"), case_decoding(RacCase.III, "z")]
    raise ValueError(f"Region task must be 'rac2' or 'rac3', got {task_name!r}")


def octagon_excess(nx: float, nz: float) -> float:
    """Positive outside the octagon |2nx|+|nz| <= 2, |nx|+|2nz| <= 2."""
    return max(2 * abs(nx) + abs(nz), abs(nx) + 2 * abs(nz)) - 2.0


def single_magic_success(task: RacTask, decoding: Mapping[int, int], points: np.ndarray) -> np.ndarray:
    """Best success with one string encoded at each point, the rest at their best vertices."""
    coefficients = success_coefficients(task, decoding)
    matrix = np.array([coefficients[x] for x in task.strings])
    stab = np.array([stabilizer_value(c) for c in matrix])
    bonus = (points @ matrix.T - stab).max(axis=1)
    return 0.5 + (stab.sum() + bonus) / _normalizer(task)


def advantage_region(
    task_name: str = "rac3", grid_step: float = DEFAULT_GRID_STEP, ny: float = 0.0
) -> List[RegionSample]:
    """Classify grid points of the slice n_y = `ny` inside the Bloch ball against the 3/4 threshold.

    The default slice is the XZ plane. Off that plane the stabilizer set is the
    octahedron |nx| + |ny| + |nz| <= 1, so states with a Y component can carry
    magic while gaining nothing over the classical value.
    """
    if not 0 < grid_step <= 1:
        raise ValueError(f"grid_step must lie in (0, 1], got {grid_step}")
    if not -1 <= ny <= 1:
        raise ValueError(f"ny must lie in [-1, 1], got {ny}")
    task = RacTask(2 if task_name == "rac2" else 3)
    decodings = region_decodings(task_name)
    limit = int(math.floor(1.0 / grid_step + 1e-9))
    ticks = np.arange(-limit, limit + 1) * grid_step
    nx_grid, nz_grid = np.meshgrid(ticks, ticks, indexing="ij")
    nx_flat, nz_flat = nx_grid.ravel(), nz_grid.ravel()
    inside = nx_flat ** 2 + ny ** 2 + nz_flat ** 2 <= 1.0 + BLOCH_NORM_SLACK
    nx_flat, nz_flat = nx_flat[inside], nz_flat[inside]
    points = np.column_stack([nx_flat, np.full_like(nx_flat, ny), nz_flat])
    success = np.max([single_magic_success(task, decoding, points) for decoding in decodings], axis=0)
    threshold = float(CLASSICAL_THRESHOLD)

    samples: List[RegionSample] = []
    for nx, nz, value in zip(nx_flat, nz_flat, success):
        if abs(nx) + abs(ny) + abs(nz) <= 1.0 + BLOCH_NORM_SLACK:
            label = RegionClass.STABILIZER
        elif abs(value - threshold) <= BOUNDARY_BAND:
            label = RegionClass.BOUNDARY
        elif value > threshold:
            label = RegionClass.MAGIC_ADVANTAGE
        else:
            label = RegionClass.MAGIC_NO_ADVANTAGE
        samples.append(RegionSample(float(nx), float(nz), label, float(value), float(ny)))
    logger.debug("%s region at step %.3g, ny=%.3g: %d points", task_name, grid_step, ny, len(samples))
    return samples


def region_to_csv_rows(samples: Sequence[RegionSample]) -> List[List[str]]:
    return [["nx", "nz", "class", "success"]] + [sample.to_row() for sample in samples]
