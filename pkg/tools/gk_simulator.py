"""Classical shared-randomness simulation of stabilizer-limited strategies.

Part of the `magic_forge` framework.

Given a partition of Alice's inputs into the d(d+1) stabilizer cells and of
Bob's inputs into the d+1 MUB measurements, this module:
- builds the quantum extreme strategy (cell r -> psi^j_k, y -> basis t)
- builds the classical protocol that reproduces it with d+1 shared dits:
  Alice sends m = j - lambda_k (mod d), Bob outputs b = m + lambda_t (mod d)
- evaluates that protocol exactly (rational) or by seeded sampling
- compares both sides and extends the comparison to shared mixtures

Partitions serialize as ``{"dim": d, "x_cells": {"<x>": r}, "y_cells": {"<y>": t}}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

try:  # Local import when executed from repo root
    from channel_model import (
        ClassicalPureStrategy,
        Correlation,
        Probability,
        QuantumStrategy,
        SharedStrategy,
        TaskSpaces,
        correlation_distance,
        eval_quantum,
        eval_shared,
        mub_povm,
    )
    from hw_algebra import EQ_TOL, as_prime_dim
    from stab_mub import StabilizerStateId, stabilizer_state
except ImportError:  # pragma: no cover - fallback to package-style import
    from tools.channel_model import (  # type: ignore
        ClassicalPureStrategy,
        Correlation,
        Probability,
        QuantumStrategy,
        SharedStrategy,
        TaskSpaces,
        correlation_distance,
        eval_quantum,
        eval_shared,
        mub_povm,
    )
    from tools.hw_algebra import EQ_TOL, as_prime_dim  # type: ignore
    from tools.stab_mub import StabilizerStateId, stabilizer_state  # type: ignore

logger = logging.getLogger(__name__)

MAX_PURE_ATOMS = 10 ** 5


class PartitionError(ValueError):
    """Raised for partitions that reference cells outside the allowed range."""


@dataclass(frozen=True)
class PartitionX:
    dim: int
    assign: Mapping[Hashable, int]

    def __post_init__(self) -> None:
        pd = as_prime_dim(self.dim)
        object.__setattr__(self, "dim", pd.d)
        if not self.assign:
            raise PartitionError("x partition is empty")
        cells = pd.d * (pd.d + 1)
        for x, r in self.assign.items():
            if isinstance(r, bool) or not isinstance(r, int) or not 1 <= r <= cells:
                raise PartitionError(f"x={x!r} assigned to cell {r!r}; expected 1..{cells}")
        object.__setattr__(self, "assign", dict(self.assign))

    @property
    def inputs(self) -> Tuple[Hashable, ...]:
        return tuple(self.assign)

    def cell(self, x: Hashable) -> Tuple[int, int]:
        return decode_cell(self.assign[x], self.dim)


@dataclass(frozen=True)
class PartitionY:
    dim: int
    assign: Mapping[Hashable, int]

    def __post_init__(self) -> None:
        pd = as_prime_dim(self.dim)
        object.__setattr__(self, "dim", pd.d)
        if not self.assign:
            raise PartitionError("y partition is empty")
        for y, t in self.assign.items():
            if isinstance(t, bool) or not isinstance(t, int) or not 1 <= t <= pd.d + 1:
                raise PartitionError(f"y={y!r} assigned to basis {t!r}; expected 1..{pd.d + 1}")
        object.__setattr__(self, "assign", dict(self.assign))

    @property
    def inputs(self) -> Tuple[Hashable, ...]:
        return tuple(self.assign)


@dataclass(frozen=True)
class SharedDits:
    """d+1 independent uniform dits; only sampling consumes the seed."""

    dim: int
    seed: Optional[int] = None

    @property
    def count(self) -> int:
        return self.dim + 1

    def sample(self, n_samples: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.integers(0, self.dim, size=(n_samples, self.count))


def decode_cell(r: int, d: int) -> Tuple[int, int]:
    """Invert r = d(k-1) + j + 1."""
    pd = as_prime_dim(d)
    if not 1 <= r <= pd.d * (pd.d + 1):
        raise PartitionError(f"Cell index {r} outside 1..{pd.d * (pd.d + 1)}")
    k, j = divmod(r - 1, pd.d)
    return k + 1, j


def _check_dims(part_x: PartitionX, part_y: PartitionY, d: int) -> int:
    pd = as_prime_dim(d)
    if part_x.dim != pd.d or part_y.dim != pd.d:
        raise PartitionError(f"Partitions built for d={part_x.dim}/{part_y.dim}, used with d={pd.d}")
    return pd.d


def output_spaces(part_x: PartitionX, part_y: PartitionY, d: int) -> TaskSpaces:
    return TaskSpaces(part_x.inputs, part_y.inputs, tuple(range(d)), d)


def build_stabilizer_strategy(part_x: PartitionX, part_y: PartitionY, d: int) -> QuantumStrategy:
    d = _check_dims(part_x, part_y, d)
    spaces = output_spaces(part_x, part_y, d)
    labels = {x: StabilizerStateId(*part_x.cell(x)) for x in spaces.X}
    bases = dict(part_y.assign)
    return QuantumStrategy(
        spaces,
        encode={x: stabilizer_state(d, sid) for x, sid in labels.items()},
        decode={y: mub_povm(d, t) for y, t in bases.items()},
        post={y: tuple(range(d)) for y in spaces.Y},
        stabilizer_encoding=labels,
        mub_decoding=bases,
    )


def classical_simulation_exact(part_x: PartitionX, part_y: PartitionY, d: int) -> Correlation:
    """Marginalize the protocol over the dits it reads (lambda_k, lambda_t) for each cell."""
    d = _check_dims(part_x, part_y, d)
    spaces = output_spaces(part_x, part_y, d)
    table: Dict[Tuple[Hashable, Hashable, Hashable], Probability] = {
        cell: Fraction(0) for cell in spaces.cells()
    }
    for x in spaces.X:
        k, j = part_x.cell(x)
        for y in spaces.Y:
            t = part_y.assign[y]
            if t == k:
                for lam in range(d):
                    message = (j - lam) % d
                    table[(x, y, (message + lam) % d)] += Fraction(1, d)
                continue
            for lam_k in range(d):
                message = (j - lam_k) % d
                for lam_t in range(d):
                    table[(x, y, (message + lam_t) % d)] += Fraction(1, d * d)
    return Correlation(spaces, table, exact=True)


@dataclass(frozen=True)
class SampledSimulation:
    correlation: Correlation
    standard_errors: Dict[Tuple[Hashable, Hashable, Hashable], float]
    n_samples: int
    seed: int

    @property
    def max_standard_error(self) -> float:
        return max(self.standard_errors.values())

    def to_dict(self) -> Dict[str, object]:
        return {"n_samples": self.n_samples, "seed": self.seed, "max_standard_error": self.max_standard_error}


def classical_simulation_sampled(
    part_x: PartitionX,
    part_y: PartitionY,
    d: int,
    n_samples: int,
    seed: int = 0,
) -> SampledSimulation:
    """Run the protocol n_samples times; each round shares one draw of all d+1 dits."""
    d = _check_dims(part_x, part_y, d)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    spaces = output_spaces(part_x, part_y, d)
    dits = SharedDits(d, seed).sample(n_samples)
    table: Dict[Tuple[Hashable, Hashable, Hashable], Probability] = {}
    errors: Dict[Tuple[Hashable, Hashable, Hashable], float] = {}
    for x in spaces.X:
        k, j = part_x.cell(x)
        messages = (j - dits[:, k - 1]) % d
        for y in spaces.Y:
            outputs = (messages + dits[:, part_y.assign[y] - 1]) % d
            frequencies = np.bincount(outputs, minlength=d) / n_samples
            for b in spaces.B:
                p = float(frequencies[b])
                table[(x, y, b)] = p
                errors[(x, y, b)] = math.sqrt(p * (1 - p) / n_samples)
    logger.debug("sampled protocol d=%d n=%d seed=%d", d, n_samples, seed)
    return SampledSimulation(Correlation(spaces, table, exact=False, tol=EQ_TOL), errors, n_samples, seed)


@dataclass
class SimulationReport:
    dim: int
    max_deviation: float
    passed: bool
    mode: str = "exact"
    seed: Optional[int] = None
    quantum: Optional[Correlation] = field(default=None, repr=False)
    classical: Optional[Correlation] = field(default=None, repr=False)
    sampled: Optional[SampledSimulation] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "dim": self.dim,
            "max_deviation": self.max_deviation,
            "pass": self.passed,
            "mode": self.mode,
        }
        if self.seed is not None:
            data["seed"] = self.seed
        if self.sampled is not None:
            data["sampled"] = self.sampled.to_dict()
        if self.classical is not None:
            data["classical"] = self.classical.to_dict()
        return data


def verify_theorem1(part_x: PartitionX, part_y: PartitionY, d: int, tol: float = EQ_TOL) -> SimulationReport:
    """Born-rule correlation of the stabilizer strategy against the exact classical protocol."""
    d = _check_dims(part_x, part_y, d)
    quantum = eval_quantum(build_stabilizer_strategy(part_x, part_y, d), exact=False)
    classical = classical_simulation_exact(part_x, part_y, d)
    deviation = float(correlation_distance(quantum, classical))
    logger.debug("stabilizer simulation d=%d: deviation %.3e", d, deviation)
    return SimulationReport(d, deviation, deviation < tol, quantum=quantum, classical=classical)


def verify_sampled(
    part_x: PartitionX,
    part_y: PartitionY,
    d: int,
    n_samples: int,
    seed: int = 0,
    sigmas: float = 5.0,
) -> SimulationReport:
    """Pass when every cell lies within `sigmas` binomial standard errors of the exact value."""
    exact = classical_simulation_exact(part_x, part_y, d)
    sampled = classical_simulation_sampled(part_x, part_y, d, n_samples, seed)
    deviation = float(correlation_distance(exact, sampled.correlation))
    allowance = sigmas / math.sqrt(n_samples)
    return SimulationReport(
        exact.spaces.dim,
        deviation,
        deviation <= allowance,
        mode="sampled",
        seed=seed,
        classical=exact,
        sampled=sampled,
    )


@dataclass(frozen=True)
class SharedDitProtocol:
    """The classical shared-dit protocol for one pair of partitions."""

    part_x: PartitionX
    part_y: PartitionY
    dim: int

    kind = "classical"

    def __post_init__(self) -> None:
        object.__setattr__(self, "dim", _check_dims(self.part_x, self.part_y, self.dim))

    @property
    def spaces(self) -> TaskSpaces:
        return output_spaces(self.part_x, self.part_y, self.dim)

    def correlation(self) -> Correlation:
        return classical_simulation_exact(self.part_x, self.part_y, self.dim)

    def pure_atoms(self, limit: int = MAX_PURE_ATOMS) -> SharedStrategy:
        """One deterministic strategy per value of (lambda_1, ..., lambda_(d+1))."""
        d = self.dim
        configurations = d ** (d + 1)
        if configurations > limit:
            raise ValueError(f"{configurations} dit configurations exceed the limit {limit}")
        spaces = self.spaces
        weight = Fraction(1, configurations)
        atoms = []
        for lam in product(range(d), repeat=d + 1):
            encode = {}
            for x in spaces.X:
                k, j = self.part_x.cell(x)
                encode[x] = (j - lam[k - 1]) % d
            decode = {
                y: tuple((m + lam[self.part_y.assign[y] - 1]) % d for m in range(d)) for y in spaces.Y
            }
            atoms.append((weight, ClassicalPureStrategy(spaces, encode, decode)))
        return SharedStrategy(tuple(atoms))


MixtureAtom = Tuple[Probability, PartitionX, PartitionY]


def simulate_shared_stabilizer(atoms: Sequence[MixtureAtom], d: int) -> SharedStrategy:
    """Classical shared strategy matching a mixture of stabilizer extreme strategies."""
    return SharedStrategy(tuple((w, SharedDitProtocol(px, py, d)) for w, px, py in atoms))


def quantum_mixture(atoms: Sequence[MixtureAtom], d: int) -> SharedStrategy:
    return SharedStrategy(tuple((w, build_stabilizer_strategy(px, py, d)) for w, px, py in atoms))


def born_rule_mixture(atoms: Sequence[MixtureAtom], d: int) -> Correlation:
    """Weighted Born-rule correlation of the quantum mixture, in float mode."""
    shared = quantum_mixture(atoms, d)
    parts = [(float(w), eval_quantum(atom, exact=False)) for w, atom in shared.atoms]
    spaces = parts[0][1].spaces
    table = {cell: sum(w * float(corr.table[cell]) for w, corr in parts) for cell in spaces.cells()}
    return Correlation(spaces, table, exact=False, tol=EQ_TOL)


def verify_mixture(atoms: Sequence[MixtureAtom], d: int, tol: float = EQ_TOL) -> SimulationReport:
    classical = eval_shared(simulate_shared_stabilizer(atoms, d))
    quantum = born_rule_mixture(atoms, d)
    deviation = float(correlation_distance(quantum, classical))
    return SimulationReport(as_prime_dim(d).d, deviation, deviation < tol, mode="mixture", quantum=quantum, classical=classical)


def maximal_partitions(d: int) -> Tuple[PartitionX, PartitionY]:
    """One input per stabilizer cell and one per MUB, labelled by the cell index."""
    pd = as_prime_dim(d)
    cells = pd.d * (pd.d + 1)
    return (
        PartitionX(pd.d, {r: r for r in range(1, cells + 1)}),
        PartitionY(pd.d, {t: t for t in range(1, pd.d + 2)}),
    )


def random_partitions(
    d: int,
    rng: np.random.Generator,
    x_size: int,
    y_size: int,
    x_cells: Optional[Sequence[int]] = None,
    y_bases: Optional[Sequence[int]] = None,
) -> Tuple[PartitionX, PartitionY]:
    """Random assignment onto the given cells/bases (default: all of them)."""
    pd = as_prime_dim(d)
    x_choices = list(x_cells or range(1, pd.d * (pd.d + 1) + 1))
    y_choices = list(y_bases or range(1, pd.d + 2))
    part_x = PartitionX(pd.d, {f"x{i}": int(rng.choice(x_choices)) for i in range(x_size)})
    part_y = PartitionY(pd.d, {f"y{i}": int(rng.choice(y_choices)) for i in range(y_size)})
    return part_x, part_y


def partitions_from_json(payload: Mapping[str, object]) -> Tuple[int, PartitionX, PartitionY]:
    try:
        d = payload["dim"]
        x_cells = payload["x_cells"]
        y_cells = payload["y_cells"]
    except KeyError as exc:
        raise PartitionError(f"Partition JSON missing field {exc.args[0]!r}") from exc
    if not isinstance(x_cells, Mapping) or not isinstance(y_cells, Mapping):
        raise PartitionError("x_cells and y_cells must be JSON objects")
    return as_prime_dim(d).d, PartitionX(d, dict(x_cells)), PartitionY(d, dict(y_cells))


def correlation_grid(corr: Correlation) -> List[List[str]]:
    """Rows x, columns (y, b): the layout of the printed stabilizer tables."""
    header = ["x"] + [f"y={y},b={b}" for y in corr.spaces.Y for b in corr.spaces.B]
    rows = [header]
    for x in corr.spaces.X:
        row = [str(x)]
        for y in corr.spaces.Y:
            for b in corr.spaces.B:
                value = corr.p(b, x, y)
                row.append(str(Fraction(value)) if corr.exact else f"{float(value):.12g}")
        rows.append(row)
    return rows
