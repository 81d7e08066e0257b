"""Shift/phase operators, Heisenberg-Weyl labels and Clifford checks for prime d.

Part of the `magic_forge` framework.

This module provides:
- `PrimeDim` and `PauliLabel` value types with eager validation
- dense constructions of X, Z and P_(a1,a2) (with the i^(a1 a2) convention at d=2)
- exact label arithmetic (`pauli_compose`, `pauli_inverse`)
- `is_clifford`, a projection test on the conjugated generators
- `clifford_enumerate_projective`, closure of the label action for d in {2, 3}

Dense operators serialize as ``{"dim": d, "re": [[...]], "im": [[...]]}``.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
EQ_TOL = 1e-12
ENUMERATION_DIMS = frozenset({2, 3})

# (a1, a2, phase_exp) images of X and of Z under conjugation
LabelTriple = Tuple[int, int, int]
Action = Tuple[LabelTriple, LabelTriple]


class DimensionError(ValueError):
    """Raised when a dimension is not a supported prime."""


class NotUnitaryError(ValueError):
    """Raised when an operator expected to be unitary is not."""


def is_prime(value: int) -> bool:
    """Trial-division primality check."""
    if value < 2:
        return False
    if value % 2 == 0:
        return value == 2
    divisor = 3
    while divisor * divisor <= value:
        if value % divisor == 0:
            return False
        divisor += 2
    return True


@dataclass(frozen=True)
class PrimeDim:
    d: int

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or not isinstance(self.d, (int, np.integer)):
            raise DimensionError(f"Dimension must be an integer, got {self.d!r}")
        if not is_prime(int(self.d)):
            raise DimensionError(f"Dimension {self.d} is not prime")
        object.__setattr__(self, "d", int(self.d))

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * math.pi / self.d)

    @property
    def phase_modulus(self) -> int:
        """Phases are tracked modulo i for qubits and modulo omega otherwise."""
        return 4 if self.d == 2 else self.d

    @property
    def phase_unit(self) -> complex:
        return 1j if self.d == 2 else self.omega

    def __int__(self) -> int:
        return self.d


DimLike = Union[int, PrimeDim]


def as_prime_dim(d: DimLike) -> PrimeDim:
    return d if isinstance(d, PrimeDim) else PrimeDim(d)


@dataclass(frozen=True)
class PauliLabel:
    """Point (a1, a2) of Z_d x Z_d plus a global phase exponent."""

    dim: int
    a1: int
    a2: int
    phase_exp: int = 0

    def __post_init__(self) -> None:
        pd = as_prime_dim(self.dim)
        object.__setattr__(self, "dim", pd.d)
        if not (0 <= self.a1 < pd.d and 0 <= self.a2 < pd.d):
            raise ValueError(f"Label ({self.a1}, {self.a2}) outside Z_{pd.d} x Z_{pd.d}")
        if not 0 <= self.phase_exp < pd.phase_modulus:
            raise ValueError(f"Phase exponent {self.phase_exp} outside Z_{pd.phase_modulus}")

    @classmethod
    def of(cls, d: DimLike, a1: int, a2: int, phase_exp: int = 0) -> "PauliLabel":
        """Build a label reducing every component into its modulus."""
        pd = as_prime_dim(d)
        return cls(pd.d, a1 % pd.d, a2 % pd.d, phase_exp % pd.phase_modulus)

    @property
    def point(self) -> Tuple[int, int]:
        return (self.a1, self.a2)

    def as_triple(self) -> LabelTriple:
        return (self.a1, self.a2, self.phase_exp)


def make_shift(d: DimLike) -> np.ndarray:
    """X|j> = |j+1 mod d>."""
    pd = as_prime_dim(d)
    return np.roll(np.eye(pd.d, dtype=complex), 1, axis=0)


def make_phase(d: DimLike) -> np.ndarray:
    """Z = diag(1, w, ..., w^(d-1))."""
    pd = as_prime_dim(d)
    return np.diag(np.exp(2j * np.pi * np.arange(pd.d) / pd.d))


def make_pauli(d: DimLike, label: PauliLabel) -> np.ndarray:
    pd = as_prime_dim(d)
    if label.dim != pd.d:
        raise DimensionError(f"Label for d={label.dim} used with d={pd.d}")
    base = np.linalg.matrix_power(make_shift(pd), label.a1) @ np.linalg.matrix_power(make_phase(pd), label.a2)
    if pd.d == 2:
        base = (1j ** (label.a1 * label.a2)) * base
    return (pd.phase_unit ** label.phase_exp) * base


def pauli_compose(d: DimLike, l1: PauliLabel, l2: PauliLabel) -> PauliLabel:
    """Label of make_pauli(l1) @ make_pauli(l2)."""
    pd = as_prime_dim(d)
    a, b, p = l1.a1, l1.a2, l1.phase_exp
    c, e, q = l2.a1, l2.a2, l2.phase_exp
    a_out, b_out = (a + c) % pd.d, (b + e) % pd.d
    if pd.d == 2:
        # i^(ab) X^a Z^b i^(ce) X^c Z^e = i^(ab+ce+2bc) X^(a+c) Z^(b+e)
        phase = p + q + a * b + c * e + 2 * b * c - a_out * b_out
    else:
        # Z^b X^c = w^(bc) X^c Z^b
        phase = p + q + b * c
    return PauliLabel.of(pd, a_out, b_out, phase)


def pauli_inverse(d: DimLike, label: PauliLabel) -> PauliLabel:
    pd = as_prime_dim(d)
    if pd.d == 2:
        return PauliLabel.of(pd, label.a1, label.a2, -label.phase_exp)
    return PauliLabel.of(pd, -label.a1, -label.a2, label.a1 * label.a2 - label.phase_exp)


def pauli_labels(d: DimLike) -> List[PauliLabel]:
    """All d^2 phase-free labels in row-major (a1, a2) order."""
    pd = as_prime_dim(d)
    return [PauliLabel(pd.d, a1, a2) for a1 in range(pd.d) for a2 in range(pd.d)]


def pauli_coefficients(d: DimLike, operator: np.ndarray) -> np.ndarray:
    """Coefficients c[a1, a2] with operator = sum c P_(a1,a2); Tr(P_a^dag P_b) = d delta_ab."""
    pd = as_prime_dim(d)
    coeffs = np.zeros((pd.d, pd.d), dtype=complex)
    for label in pauli_labels(pd):
        coeffs[label.a1, label.a2] = np.trace(make_pauli(pd, label).conj().T @ operator) / pd.d
    return coeffs


def unitarity_defect(matrix: np.ndarray) -> float:
    identity = np.eye(matrix.shape[0])
    return float(np.abs(matrix.conj().T @ matrix - identity).max())


class Verdict(str, Enum):
    CLIFFORD = "clifford"
    NOT_CLIFFORD = "not-clifford"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ConjugationEntry:
    """U P U^dag = phase * make_pauli(image), image carrying no phase."""

    image: PauliLabel
    phase: complex

    @property
    def phase_exp(self) -> Optional[int]:
        """Exponent of the phase in units of i (d=2) or w, None when off-lattice."""
        pd = PrimeDim(self.image.dim)
        step = 2 * math.pi / pd.phase_modulus
        angle = cmath.phase(self.phase) % (2 * math.pi)
        k = round(angle / step)
        if abs(angle - k * step) > 1e-6:
            return None
        return k % pd.phase_modulus

    def to_label(self) -> PauliLabel:
        exp = self.phase_exp
        if exp is None:
            raise ValueError(f"Phase {self.phase} is not a power of the phase unit")
        return PauliLabel(self.image.dim, self.image.a1, self.image.a2, exp)

    def to_dict(self) -> Dict[str, object]:
        return {
            "image": [self.image.a1, self.image.a2],
            "phase_re": round(self.phase.real, 12),
            "phase_im": round(self.phase.imag, 12),
            "phase_exp": self.phase_exp,
        }


@dataclass(frozen=True)
class CliffordVerdict:
    verdict: Verdict
    table: Optional[Dict[str, ConjugationEntry]] = None
    detail: str = ""

    @property
    def is_clifford(self) -> bool:
        return self.verdict is Verdict.CLIFFORD

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"verdict": self.verdict.value, "detail": self.detail}
        if self.table is not None:
            data["table"] = {name: entry.to_dict() for name, entry in self.table.items()}
        return data


GENERATOR_LABELS = {"X": (1, 0), "Z": (0, 1)}


def is_clifford(d: DimLike, unitary: np.ndarray, tol: float = DEFAULT_TOL) -> CliffordVerdict:
    """Test whether conjugation by `unitary` maps X and Z onto phased Paulis."""
    pd = as_prime_dim(d)
    unitary = np.asarray(unitary, dtype=complex)
    if unitary.shape != (pd.d, pd.d):
        raise DimensionError(f"Expected a {pd.d}x{pd.d} matrix, got shape {unitary.shape}")
    defect = unitarity_defect(unitary)
    if defect > tol:
        raise NotUnitaryError(f"U^dag U deviates from I by {defect:.3e} (tol {tol:.1e})")

    table: Dict[str, ConjugationEntry] = {}
    borderline: List[str] = []
    for name, (a1, a2) in GENERATOR_LABELS.items():
        conjugated = unitary @ make_pauli(pd, PauliLabel(pd.d, a1, a2)) @ unitary.conj().T
        coeffs = pauli_coefficients(pd, conjugated)
        magnitudes = np.abs(coeffs)
        top = np.unravel_index(int(np.argmax(magnitudes)), magnitudes.shape)
        others = magnitudes.copy()
        others[top] = 0.0
        largest_other = float(others.max())
        unit_defect = abs(float(magnitudes[top]) - 1.0)
        if largest_other > 10 * tol or unit_defect > 10 * tol:
            return CliffordVerdict(
                Verdict.NOT_CLIFFORD,
                detail=f"U{name}U^dag spreads over several Paulis (residual {max(largest_other, unit_defect):.3e})",
            )
        if largest_other >= tol or unit_defect >= tol:
            borderline.append(f"{name}: residual {max(largest_other, unit_defect):.3e}")
        coefficient = complex(coeffs[top])
        table[name] = ConjugationEntry(
            PauliLabel(pd.d, int(top[0]), int(top[1])), coefficient / abs(coefficient)
        )
    if borderline:
        return CliffordVerdict(Verdict.INDETERMINATE, detail="; ".join(borderline))
    return CliffordVerdict(Verdict.CLIFFORD, table=table)


def apply_action(d: DimLike, action: Action, label: PauliLabel) -> PauliLabel:
    """Image of a labelled Pauli under a Clifford given by its generator images."""
    pd = as_prime_dim(d)
    image_x = PauliLabel(pd.d, *action[0])
    image_z = PauliLabel(pd.d, *action[1])
    extra = label.a1 * label.a2 if pd.d == 2 else 0
    result = PauliLabel.of(pd, 0, 0, label.phase_exp + extra)
    for _ in range(label.a1):
        result = pauli_compose(pd, result, image_x)
    for _ in range(label.a2):
        result = pauli_compose(pd, result, image_z)
    return result


def compose_actions(d: DimLike, outer: Action, inner: Action) -> Action:
    """Action of U_outer U_inner."""
    pd = as_prime_dim(d)
    return (
        apply_action(pd, outer, PauliLabel(pd.d, *inner[0])).as_triple(),
        apply_action(pd, outer, PauliLabel(pd.d, *inner[1])).as_triple(),
    )


def identity_action() -> Action:
    return ((1, 0, 0), (0, 1, 0))


@dataclass(frozen=True)
class CliffordElement:
    """A Clifford modulo global phase: its label action plus one dense representative."""

    dim: int
    action: Action
    matrix: np.ndarray = field(compare=False, repr=False, hash=False)

    def conjugate(self, operator: np.ndarray) -> np.ndarray:
        return self.matrix @ operator @ self.matrix.conj().T


def conjugate_by_action(d: DimLike, action: Action, operator: np.ndarray) -> np.ndarray:
    """U A U^dag computed through the Pauli expansion of A."""
    pd = as_prime_dim(d)
    coeffs = pauli_coefficients(pd, operator)
    result = np.zeros((pd.d, pd.d), dtype=complex)
    for label in pauli_labels(pd):
        coefficient = coeffs[label.a1, label.a2]
        if abs(coefficient) < EQ_TOL:
            continue
        result += coefficient * make_pauli(pd, apply_action(pd, action, label))
    return result


def fourier_gate(d: DimLike) -> np.ndarray:
    pd = as_prime_dim(d)
    j = np.arange(pd.d)
    return np.exp(2j * np.pi * np.outer(j, j) / pd.d) / math.sqrt(pd.d)


def phase_gate(d: DimLike) -> np.ndarray:
    """diag(1, i) for qubits, diag(w^(j(j-1)/2)) for odd prime d."""
    pd = as_prime_dim(d)
    if pd.d == 2:
        return np.diag([1.0, 1j])
    j = np.arange(pd.d)
    return np.diag(np.exp(2j * np.pi * (j * (j - 1) // 2) / pd.d))


def clifford_generators(d: DimLike) -> Dict[str, np.ndarray]:
    pd = as_prime_dim(d)
    return {"F": fourier_gate(pd), "S": phase_gate(pd), "X": make_shift(pd), "Z": make_phase(pd)}


def action_of(d: DimLike, unitary: np.ndarray) -> Action:
    pd = as_prime_dim(d)
    verdict = is_clifford(pd, unitary)
    if not verdict.is_clifford or verdict.table is None:
        raise ValueError(f"Generator is not Clifford: {verdict.detail}")
    return (verdict.table["X"].to_label().as_triple(), verdict.table["Z"].to_label().as_triple())


def clifford_enumerate_projective(d: DimLike) -> Tuple[CliffordElement, ...]:
    """Breadth-first closure of the generator actions; one element per projective Clifford."""
    pd = as_prime_dim(d)
    if pd.d not in ENUMERATION_DIMS:
        raise DimensionError(f"Clifford enumeration supports d in {sorted(ENUMERATION_DIMS)}, got {pd.d}")

    generators = [(action_of(pd, matrix), matrix) for matrix in clifford_generators(pd).values()]
    start = CliffordElement(pd.d, identity_action(), np.eye(pd.d, dtype=complex))
    seen: Dict[Action, CliffordElement] = {start.action: start}
    queue: deque[CliffordElement] = deque([start])
    while queue:
        element = queue.popleft()
        for gen_action, gen_matrix in generators:
            action = compose_actions(pd, gen_action, element.action)
            if action in seen:
                continue
            successor = CliffordElement(pd.d, action, gen_matrix @ element.matrix)
            seen[action] = successor
            queue.append(successor)
    logger.debug("Clifford closure for d=%d: %d elements", pd.d, len(seen))
    return tuple(seen.values())


def operator_to_json(matrix: np.ndarray) -> Dict[str, object]:
    matrix = np.asarray(matrix, dtype=complex)
    return {
        "dim": int(matrix.shape[0]),
        "re": matrix.real.tolist(),
        "im": matrix.imag.tolist(),
    }


def operator_from_json(payload: Mapping[str, object]) -> np.ndarray:
    """Parse the dense operator interface; `im` defaults to zero."""
    try:
        real = np.asarray(payload["re"], dtype=float)
    except KeyError as exc:
        raise ValueError("Dense operator JSON requires an 're' field") from exc
    imag = np.asarray(payload.get("im", np.zeros_like(real)), dtype=float)
    if real.ndim != 2 or real.shape[0] != real.shape[1] or imag.shape != real.shape:
        raise ValueError(f"Dense operator must be square, got re {real.shape} / im {imag.shape}")
    dim = payload.get("dim", real.shape[0])
    if dim != real.shape[0]:
        raise ValueError(f"Declared dim {dim} does not match matrix size {real.shape[0]}")
    return real + 1j * imag


def operators_close(a: np.ndarray, b: np.ndarray, tol: float = EQ_TOL) -> bool:
    return bool(np.abs(np.asarray(a) - np.asarray(b)).max() <= tol)


def powers(matrix: np.ndarray, count: int) -> Iterable[np.ndarray]:
    current = np.eye(matrix.shape[0], dtype=complex)
    for _ in range(count):
        yield current
        current = current @ matrix
