"""Strategies for one-way prepare-and-measure tasks and their correlations p(b|x,y).

Part of the `magic_forge` framework.

This module holds:
- `TaskSpaces` and `FunctionTask` (finite X, Y, B and a target map f(x, y))
- classical pure, quantum and shared strategies, validated on construction
- `Correlation` tables kept as exact `Fraction`s (classical and stabilizer
  paths) or as doubles with a declared tolerance (Born-rule paths)
- the evaluators `eval_classical`, `eval_quantum`, `eval_shared` and the
  distance `correlation_distance`
- the strategy JSON schema reader `strategy_from_json`
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from numbers import Real
from typing import Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

try:  # Local import when executed from repo root
    from hw_algebra import DEFAULT_TOL, EQ_TOL, as_prime_dim, operator_from_json
    from stab_mub import BlochVector, StabilizerStateId, mub_projectors, overlap, stabilizer_state
except ImportError:  # pragma: no cover - fallback to package-style import
    from tools.hw_algebra import DEFAULT_TOL, EQ_TOL, as_prime_dim, operator_from_json  # type: ignore
    from tools.stab_mub import (  # type: ignore
        BlochVector,
        StabilizerStateId,
        mub_projectors,
        overlap,
        stabilizer_state,
    )

logger = logging.getLogger(__name__)

Probability = Union[Fraction, float]
Cell = Tuple[Hashable, Hashable, Hashable]


class ValidationError(ValueError):
    """A strategy or table broke one of its invariants."""

    def __init__(self, invariant: str, magnitude: float = 0.0, subject: str = "") -> None:
        self.invariant = invariant
        self.magnitude = magnitude
        self.subject = subject
        where = f" [{subject}]" if subject else ""
        super().__init__(f"{invariant}{where}: magnitude {magnitude:.3e}")


class SpaceMismatchError(ValueError):
    """Raised when two objects are defined over different alphabets."""


@dataclass(frozen=True)
class TaskSpaces:
    X: Tuple[Hashable, ...]
    Y: Tuple[Hashable, ...]
    B: Tuple[Hashable, ...]
    dim: int

    def __post_init__(self) -> None:
        for name in ("X", "Y", "B"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"Alphabet {name} must be nonempty")
            if len(set(values)) != len(values):
                raise ValueError(f"Alphabet {name} has duplicate symbols")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "dim", as_prime_dim(self.dim).d)

    def same_alphabets(self, other: "TaskSpaces") -> bool:
        return (
            set(self.X) == set(other.X)
            and set(self.Y) == set(other.Y)
            and set(self.B) == set(other.B)
            and self.dim == other.dim
        )

    def cells(self) -> Iterator[Cell]:
        for x in self.X:
            for y in self.Y:
                for b in self.B:
                    yield (x, y, b)


def require_same_spaces(a: TaskSpaces, b: TaskSpaces, what: str) -> None:
    if not a.same_alphabets(b):
        raise SpaceMismatchError(f"{what}: alphabets differ")


@dataclass(frozen=True)
class FunctionTask:
    """Compute f(x, y) with uniformly random inputs."""

    spaces: TaskSpaces
    targets: Mapping[Tuple[Hashable, Hashable], Hashable]

    def __post_init__(self) -> None:
        for x in self.spaces.X:
            for y in self.spaces.Y:
                if self.targets.get((x, y)) not in self.spaces.B:
                    raise ValueError(f"Target for ({x!r}, {y!r}) missing or outside B")

    def target(self, x: Hashable, y: Hashable) -> Hashable:
        return self.targets[(x, y)]


@dataclass(frozen=True)
class Correlation:
    spaces: TaskSpaces
    table: Mapping[Cell, Probability]
    exact: bool = True
    tol: float = 0.0

    def __post_init__(self) -> None:
        slack = 0.0 if self.exact else max(self.tol, EQ_TOL)
        for x in self.spaces.X:
            for y in self.spaces.Y:
                total: Probability = Fraction(0) if self.exact else 0.0
                for b in self.spaces.B:
                    try:
                        value = self.table[(x, y, b)]
                    except KeyError as exc:
                        raise ValidationError("missing table entry", subject=f"x={x!r}, y={y!r}, b={b!r}") from exc
                    if self.exact and not isinstance(value, (Fraction, int)):
                        raise ValidationError("non-rational entry in exact table", subject=f"x={x!r}, y={y!r}, b={b!r}")
                    if value < -slack or value > 1 + slack:
                        raise ValidationError("entry outside [0,1]", float(abs(value)), f"x={x!r}, y={y!r}, b={b!r}")
                    total += value
                if abs(total - 1) > slack:
                    raise ValidationError("sum_b p(b|x,y) != 1", float(abs(total - 1)), f"x={x!r}, y={y!r}")

    def p(self, b: Hashable, x: Hashable, y: Hashable) -> Probability:
        return self.table[(x, y, b)]

    def rows(self) -> Iterator[Tuple[Hashable, Hashable, Hashable, Probability]]:
        for x, y, b in self.spaces.cells():
            yield x, y, b, self.table[(x, y, b)]

    def to_csv_rows(self) -> List[List[str]]:
        rows = [["x", "y", "b", "p"]]
        for x, y, b, value in self.rows():
            rows.append([str(x), str(y), str(b), format_probability(value)])
        return rows

    def to_dict(self) -> Dict[str, object]:
        return {
            "mode": "rational" if self.exact else "float",
            "tol": self.tol,
            "rows": [
                {"x": str(x), "y": str(y), "b": str(b), "p": format_probability(value)}
                for x, y, b, value in self.rows()
            ],
        }


def format_probability(value: Probability) -> str:
    """Exact values as "num/den", floats by their shortest round-trip repr."""
    if isinstance(value, (Fraction, int)):
        value = Fraction(value)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


@dataclass(frozen=True)
class ClassicalPureStrategy:
    spaces: TaskSpaces
    encode: Mapping[Hashable, int]
    decode: Mapping[Hashable, Tuple[Hashable, ...]]

    def __post_init__(self) -> None:
        d = self.spaces.dim
        for x in self.spaces.X:
            message = self.encode.get(x)
            if message is None or not 0 <= message < d:
                raise ValidationError("encoding not total on X", subject=f"x={x!r}")
        for y in self.spaces.Y:
            table = self.decode.get(y)
            if table is None or len(table) != d:
                raise ValidationError("decoding not total on the message alphabet", subject=f"y={y!r}")
            for b in table:
                if b not in self.spaces.B:
                    raise ValidationError("decoding outputs symbol outside B", subject=f"y={y!r}, b={b!r}")

    kind = "classical"


def _hermitian_defect(matrix: np.ndarray) -> float:
    return float(np.abs(matrix - matrix.conj().T).max())


def check_density(rho: np.ndarray, dim: int, tol: float, subject: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValidationError("density has wrong shape", float(rho.shape[0]), subject)
    defect = _hermitian_defect(rho)
    if defect > tol:
        raise ValidationError("density not Hermitian", defect, subject)
    trace_defect = abs(complex(np.trace(rho)) - 1)
    if trace_defect > tol:
        raise ValidationError("density trace != 1", trace_defect, subject)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if min_eig < -tol:
        raise ValidationError("density not positive semidefinite", -min_eig, subject)
    return rho


def check_povm(effects: Sequence[np.ndarray], dim: int, tol: float, subject: str) -> Tuple[np.ndarray, ...]:
    if not effects:
        raise ValidationError("POVM has no effects", subject=subject)
    total = np.zeros((dim, dim), dtype=complex)
    checked = []
    for index, effect in enumerate(effects):
        effect = np.asarray(effect, dtype=complex)
        where = f"{subject}, outcome {index}"
        if effect.shape != (dim, dim):
            raise ValidationError("effect has wrong shape", float(effect.shape[0]), where)
        defect = _hermitian_defect(effect)
        if defect > tol:
            raise ValidationError("effect not Hermitian", defect, where)
        eigenvalues = np.linalg.eigvalsh((effect + effect.conj().T) / 2)
        if eigenvalues.min() < -tol:
            raise ValidationError("effect has negative eigenvalue", float(-eigenvalues.min()), where)
        if eigenvalues.max() > 1 + tol:
            raise ValidationError("effect eigenvalue exceeds 1", float(eigenvalues.max() - 1), where)
        total += effect
        checked.append(effect)
    completeness = float(np.abs(total - np.eye(dim)).max())
    if completeness > tol:
        raise ValidationError("effects do not sum to identity", completeness, subject)
    return tuple(checked)


def povm_rank_one_independent(effects: Sequence[np.ndarray], tol: float = DEFAULT_TOL) -> bool:
    """Rank-1 effects that are linearly independent; necessary for extremality."""
    flattened = []
    for effect in effects:
        singular = np.linalg.svd(np.asarray(effect, dtype=complex), compute_uv=False)
        if np.count_nonzero(singular > tol) != 1:
            return False
        flattened.append(np.asarray(effect, dtype=complex).ravel())
    return int(np.linalg.matrix_rank(np.array(flattened), tol=tol)) == len(flattened)


@dataclass(frozen=True)
class QuantumStrategy:
    """Encodings rho_x, POVMs M^y and post-processing of outcome k into B.

    `stabilizer_encoding` / `mub_decoding` label the objects when they are pure
    stabilizer states and MUB measurements, which enables exact evaluation.
    """

    spaces: TaskSpaces
    encode: Mapping[Hashable, np.ndarray]
    decode: Mapping[Hashable, Tuple[np.ndarray, ...]]
    post: Mapping[Hashable, Tuple[Hashable, ...]]
    tol: float = DEFAULT_TOL
    stabilizer_encoding: Optional[Mapping[Hashable, StabilizerStateId]] = None
    mub_decoding: Optional[Mapping[Hashable, int]] = None

    kind = "quantum"

    def __post_init__(self) -> None:
        d = self.spaces.dim
        for x in self.spaces.X:
            if x not in self.encode:
                raise ValidationError("encoding not total on X", subject=f"x={x!r}")
            check_density(self.encode[x], d, self.tol, f"x={x!r}")
        for y in self.spaces.Y:
            if y not in self.decode:
                raise ValidationError("decoding not total on Y", subject=f"y={y!r}")
            effects = check_povm(self.decode[y], d, self.tol, f"y={y!r}")
            outputs = self.post.get(y)
            if outputs is None or len(outputs) != len(effects):
                raise ValidationError("post-processing must name an output per outcome", subject=f"y={y!r}")
            for b in outputs:
                if b not in self.spaces.B:
                    raise ValidationError("post-processing outputs symbol outside B", subject=f"y={y!r}, b={b!r}")

    @property
    def is_labelled(self) -> bool:
        return self.stabilizer_encoding is not None and self.mub_decoding is not None


Strategy = Union[ClassicalPureStrategy, QuantumStrategy, "SharedStrategy"]


def strategy_kind(strategy: object) -> str:
    kind = getattr(strategy, "kind", None)
    if kind not in ("classical", "quantum"):
        raise TypeError(f"Object of type {type(strategy).__name__} is not a strategy")
    return kind


@dataclass(frozen=True)
class SharedStrategy:
    """Convex combination of strategies (product weights give a mixed strategy)."""

    atoms: Tuple[Tuple[Probability, object], ...]

    def __post_init__(self) -> None:
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValidationError("shared strategy needs at least one atom")
        object.__setattr__(self, "atoms", atoms)
        total: Probability = 0
        for weight, _ in atoms:
            if weight < 0:
                raise ValidationError("negative weight", float(-weight))
            total += weight
        exact = all(isinstance(w, (Fraction, int)) for w, _ in atoms)
        deviation = abs(total - 1)
        if (exact and deviation != 0) or deviation > EQ_TOL:
            raise ValidationError("weights do not sum to 1", float(deviation))
        kinds = {strategy_kind(atom) for _, atom in atoms}
        if len(kinds) != 1:
            raise ValidationError("atoms mix classical and quantum strategies")
        first = atoms[0][1].spaces
        for _, atom in atoms[1:]:
            require_same_spaces(first, atom.spaces, "shared strategy atoms")

    @property
    def kind(self) -> str:
        return strategy_kind(self.atoms[0][1])

    @property
    def spaces(self) -> TaskSpaces:
        return self.atoms[0][1].spaces


def eval_classical(strategy: ClassicalPureStrategy, spaces: Optional[TaskSpaces] = None) -> Correlation:
    """p(b|x,y) = 1 iff b = D_y(E(x))."""
    spaces = spaces or strategy.spaces
    require_same_spaces(spaces, strategy.spaces, "eval_classical")
    table: Dict[Cell, Probability] = {}
    for x in spaces.X:
        message = strategy.encode[x]
        for y in spaces.Y:
            output = strategy.decode[y][message]
            for b in spaces.B:
                table[(x, y, b)] = Fraction(int(b == output))
    return Correlation(spaces, table, exact=True)


def _eval_labelled(strategy: QuantumStrategy, spaces: TaskSpaces) -> Correlation:
    d = spaces.dim
    table: Dict[Cell, Probability] = {(x, y, b): Fraction(0) for x, y, b in spaces.cells()}
    for x in spaces.X:
        state = strategy.stabilizer_encoding[x]
        for y in spaces.Y:
            basis = strategy.mub_decoding[y]
            for outcome, b in enumerate(strategy.post[y]):
                table[(x, y, b)] += overlap(d, state, StabilizerStateId(basis, outcome))
    return Correlation(spaces, table, exact=True)


def eval_quantum(
    strategy: QuantumStrategy,
    spaces: Optional[TaskSpaces] = None,
    tol: Optional[float] = None,
    *,
    exact: bool = False,
) -> Correlation:
    """Born rule p(b|x,y) = sum_{k: post(k,y)=b} Tr(rho_x pi^{k|y})."""
    spaces = spaces or strategy.spaces
    require_same_spaces(spaces, strategy.spaces, "eval_quantum")
    if exact:
        if not strategy.is_labelled:
            raise ValueError("Exact evaluation needs stabilizer-labelled encodings and MUB-labelled decodings")
        return _eval_labelled(strategy, spaces)
    tol = strategy.tol if tol is None else tol
    table: Dict[Cell, Probability] = {(x, y, b): 0.0 for x, y, b in spaces.cells()}
    for x in spaces.X:
        rho = strategy.encode[x]
        for y in spaces.Y:
            for effect, b in zip(strategy.decode[y], strategy.post[y]):
                table[(x, y, b)] += float(np.trace(rho @ effect).real)
    return Correlation(spaces, table, exact=False, tol=tol)


def evaluate(strategy: object) -> Correlation:
    if isinstance(strategy, ClassicalPureStrategy):
        return eval_classical(strategy)
    if isinstance(strategy, QuantumStrategy):
        return eval_quantum(strategy, exact=strategy.is_labelled)
    if isinstance(strategy, SharedStrategy):
        return eval_shared(strategy)
    correlation = getattr(strategy, "correlation", None)
    if correlation is None:
        raise TypeError(f"Cannot evaluate object of type {type(strategy).__name__}")
    return correlation()


def eval_shared(shared: SharedStrategy) -> Correlation:
    """Entrywise convex combination; exact only when every weight and atom is exact."""
    parts = [(weight, evaluate(atom)) for weight, atom in shared.atoms]
    spaces = shared.spaces
    exact = all(isinstance(w, (Fraction, int)) and corr.exact for w, corr in parts)
    tol = max([corr.tol for _, corr in parts] + [0.0 if exact else EQ_TOL])
    table: Dict[Cell, Probability] = {}
    for cell in spaces.cells():
        if exact:
            table[cell] = sum((Fraction(w) * corr.table[cell] for w, corr in parts), Fraction(0))
        else:
            table[cell] = float(sum(float(w) * float(corr.table[cell]) for w, corr in parts))
    if not exact:
        logger.debug("eval_shared demoted to float mode (tol %.1e)", tol)
    return Correlation(spaces, table, exact=exact, tol=tol)


def correlation_distance(p: Correlation, q: Correlation) -> Probability:
    """l-infinity distance; a Fraction when both tables are exact."""
    require_same_spaces(p.spaces, q.spaces, "correlation_distance")
    if p.exact and q.exact:
        return max(abs(Fraction(p.table[c]) - Fraction(q.table[c])) for c in p.spaces.cells())
    return max(abs(float(p.table[c]) - float(q.table[c])) for c in p.spaces.cells())


def task_success(corr: Correlation, task) -> Probability:
    """Uniform average of p(f(x,y)|x,y); `task` exposes `spaces` and `target`."""
    require_same_spaces(corr.spaces, task.spaces, "task_success")
    cells = len(corr.spaces.X) * len(corr.spaces.Y)
    if corr.exact:
        total = sum((Fraction(corr.p(task.target(x, y), x, y)) for x in corr.spaces.X for y in corr.spaces.Y), Fraction(0))
        return total / cells
    total_f = sum(float(corr.p(task.target(x, y), x, y)) for x in corr.spaces.X for y in corr.spaces.Y)
    return total_f / cells


def mub_povm(d: int, k: int) -> Tuple[np.ndarray, ...]:
    return tuple(mub_projectors(d)[k - 1].projectors)


def _json_symbol(value: object) -> Hashable:
    return tuple(value) if isinstance(value, list) else value


def _parse_encoding(spec: Mapping[str, object], d: int, tol: float) -> Tuple[np.ndarray, Optional[StabilizerStateId]]:
    kind = spec.get("type")
    if kind == "stabilizer":
        sid = StabilizerStateId(int(spec["k"]), int(spec["j"])).validate(d)
        return stabilizer_state(d, sid), sid
    if kind == "bloch":
        if d != 2:
            raise ValidationError("Bloch encodings require dim 2", float(d))
        bloch = BlochVector.from_sequence(spec["n"])
        return bloch.density(), bloch.stabilizer_id()
    if kind == "matrix":
        return check_density(operator_from_json(spec), d, tol, "matrix encoding"), None
    raise ValidationError(f"unknown encoding type {kind!r}")


def _parse_decoding(spec: Mapping[str, object], d: int) -> Tuple[Tuple[np.ndarray, ...], Optional[int]]:
    kind = spec.get("type")
    if kind == "mub":
        k = int(spec["k"])
        if not 1 <= k <= d + 1:
            raise ValidationError("MUB index outside 1..d+1", float(k))
        return mub_povm(d, k), k
    if kind == "povm":
        return tuple(operator_from_json(effect) for effect in spec["effects"]), None
    raise ValidationError(f"unknown decoding type {kind!r}")


def strategy_from_json(payload: Mapping[str, object], tol: float = DEFAULT_TOL) -> QuantumStrategy:
    """Read the strategy schema: dim, X, Y, B, encode, decode, post."""
    try:
        d = int(payload["dim"])
        spaces = TaskSpaces(
            tuple(_json_symbol(v) for v in payload["X"]),
            tuple(_json_symbol(v) for v in payload["Y"]),
            tuple(_json_symbol(v) for v in payload["B"]),
            d,
        )
        encode_specs = payload["encode"]
        decode_specs = payload["decode"]
        post_specs = payload["post"]
    except KeyError as exc:
        raise ValidationError(f"strategy JSON missing field {exc.args[0]!r}") from exc

    encode: Dict[Hashable, np.ndarray] = {}
    labels: Dict[Hashable, StabilizerStateId] = {}
    for x in spaces.X:
        spec = encode_specs.get(str(x)) if isinstance(encode_specs, Mapping) else None
        if spec is None:
            raise ValidationError("encoding not total on X", subject=f"x={x!r}")
        encode[x], sid = _parse_encoding(spec, d, tol)
        if sid is not None:
            labels[x] = sid

    decode: Dict[Hashable, Tuple[np.ndarray, ...]] = {}
    bases: Dict[Hashable, int] = {}
    post: Dict[Hashable, Tuple[Hashable, ...]] = {}
    for y in spaces.Y:
        spec = decode_specs.get(str(y)) if isinstance(decode_specs, Mapping) else None
        if spec is None:
            raise ValidationError("decoding not total on Y", subject=f"y={y!r}")
        decode[y], k = _parse_decoding(spec, d)
        if k is not None:
            bases[y] = k
        outputs = post_specs.get(str(y)) if isinstance(post_specs, Mapping) else None
        if outputs is None:
            raise ValidationError("post-processing missing", subject=f"y={y!r}")
        post[y] = tuple(_json_symbol(b) for b in outputs)

    fully_labelled = len(labels) == len(spaces.X) and len(bases) == len(spaces.Y)
    return QuantumStrategy(
        spaces,
        encode,
        decode,
        post,
        tol=tol,
        stabilizer_encoding=labels if fully_labelled else None,
        mub_decoding=bases if fully_labelled else None,
    )


def linear_functional(corr: Correlation, weights: Mapping[Cell, Real]) -> Probability:
    """sum_c weights[c] * p(c); used to check convexity of shared strategies."""
    if corr.exact and all(isinstance(w, (Fraction, int)) for w in weights.values()):
        return sum((Fraction(w) * Fraction(corr.table[c]) for c, w in weights.items()), Fraction(0))
    return float(sum(float(w) * float(corr.table[c]) for c, w in weights.items()))


def deterministic_strategies(spaces: TaskSpaces) -> Iterable[ClassicalPureStrategy]:
    """Every classical pure strategy over `spaces`, lexicographic in (E, D)."""
    d = spaces.dim
    for messages in product(range(d), repeat=len(spaces.X)):
        encode = dict(zip(spaces.X, messages))
        for tables in product(product(spaces.B, repeat=d), repeat=len(spaces.Y)):
            yield ClassicalPureStrategy(spaces, encode, dict(zip(spaces.Y, tables)))
