"""Mutually unbiased bases, pure stabilizer states and the stabilizer polytope.

Part of the `magic_forge` framework.

For prime d this module:
- builds the d+1 MUB eigenbases of P_(0,1), P_(1,0), ..., P_(1,d-1)
- names the d(d+1) pure stabilizer states by `StabilizerStateId(k, j)`
- evaluates the exact overlap Tr(psi^j_k psi^j'_k') as a `Fraction`
- certifies membership in St_d with a HiGHS linear program (weights or a
  separating functional, both checked by direct substitution)
- computes the l1 polytope-excess magic measure

Qubit states may also be given as Bloch vectors, ``{"bloch": [nx, ny, nz]}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

try:  # Local import when executed from repo root
    from hw_algebra import (
        DEFAULT_TOL,
        EQ_TOL,
        DimLike,
        PauliLabel,
        as_prime_dim,
        make_pauli,
        operator_from_json,
        operators_close,
        powers,
    )
except ImportError:  # pragma: no cover - fallback to package-style import
    from tools.hw_algebra import (  # type: ignore
        DEFAULT_TOL,
        EQ_TOL,
        DimLike,
        PauliLabel,
        as_prime_dim,
        make_pauli,
        operator_from_json,
        operators_close,
        powers,
    )

logger = logging.getLogger(__name__)

MEASURE_NAME = "l1-polytope-excess"
RECONSTRUCTION_TOL = 1e-9
BLOCH_NORM_SLACK = 1e-12
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

# Bloch axis index (x=0, y=1, z=2) of the qubit MUB operator k: Z, X, Y
QUBIT_AXIS = {1: 2, 2: 0, 3: 1}


class PolytopeError(RuntimeError):
    """Raised when an LP fails or returns a certificate that does not check out."""


@dataclass(frozen=True, order=True)
class StabilizerStateId:
    k: int
    j: int

    def validate(self, d: DimLike) -> "StabilizerStateId":
        pd = as_prime_dim(d)
        if not (1 <= self.k <= pd.d + 1 and 0 <= self.j < pd.d):
            raise ValueError(f"Stabilizer id (k={self.k}, j={self.j}) invalid for d={pd.d}")
        return self

    def __str__(self) -> str:
        return f"psi^{self.j}_{self.k}"


def mub_operator_label(d: DimLike, k: int) -> PauliLabel:
    """k=1 -> P_(0,1); k>=2 -> P_(1,k-2)."""
    pd = as_prime_dim(d)
    if not 1 <= k <= pd.d + 1:
        raise ValueError(f"MUB index k={k} outside 1..{pd.d + 1}")
    if k == 1:
        return PauliLabel(pd.d, 0, 1)
    return PauliLabel(pd.d, 1, k - 2)


@dataclass(frozen=True)
class MubBasis:
    k: int
    vectors: Tuple[np.ndarray, ...]
    projectors: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        dim = self.projectors[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for j, proj in enumerate(self.projectors):
            if not operators_close(proj, proj.conj().T):
                raise ValueError(f"Projector {j} of basis {self.k} is not Hermitian")
            if not operators_close(proj @ proj, proj):
                raise ValueError(f"Projector {j} of basis {self.k} is not idempotent")
            for other in self.projectors[j + 1:]:
                if np.abs(proj @ other).max() > EQ_TOL:
                    raise ValueError(f"Basis {self.k} projectors are not orthogonal")
            total += proj
        if not operators_close(total, np.eye(dim)):
            raise ValueError(f"Basis {self.k} projectors do not sum to the identity")


def _eigenvector_from_projector(projector: np.ndarray) -> np.ndarray:
    """Unit vector of a rank-1 projector whose first nonzero entry is real positive."""
    diagonal = projector.diagonal().real
    index = int(np.flatnonzero(diagonal > 1e-8)[0])
    return projector[:, index] / math.sqrt(diagonal[index])


@lru_cache(maxsize=None)
def _mub_bases(d: int) -> Tuple[MubBasis, ...]:
    bases: List[MubBasis] = []
    omega = np.exp(2j * np.pi / d)
    for k in range(1, d + 2):
        operator = make_pauli(d, mub_operator_label(d, k))
        operator_powers = list(powers(operator, d))
        vectors = []
        projectors = []
        for j in range(d):
            # spectral projector onto the w^j eigenspace
            raw = sum(omega ** (-j * m) * operator_powers[m] for m in range(d)) / d
            vector = _eigenvector_from_projector(raw)
            vectors.append(vector)
            projectors.append(np.outer(vector, vector.conj()))
        bases.append(MubBasis(k, tuple(vectors), tuple(projectors)))
    return tuple(bases)


def mub_projectors(d: DimLike) -> List[MubBasis]:
    pd = as_prime_dim(d)
    return list(_mub_bases(pd.d))


def overlap(d: DimLike, id1: StabilizerStateId, id2: StabilizerStateId) -> Fraction:
    """Tr(psi^j_k psi^j'_k') = (1/d)(1 - (1-d)^delta_jj' delta_kk')."""
    pd = as_prime_dim(d)
    id1.validate(pd)
    id2.validate(pd)
    if id1.k != id2.k:
        return Fraction(1, pd.d)
    return Fraction(1) if id1.j == id2.j else Fraction(0)


def stabilizer_ids(d: DimLike) -> List[StabilizerStateId]:
    pd = as_prime_dim(d)
    return [StabilizerStateId(k, j) for k in range(1, pd.d + 2) for j in range(pd.d)]


def stabilizer_vertices(d: DimLike) -> Dict[StabilizerStateId, np.ndarray]:
    pd = as_prime_dim(d)
    bases = _mub_bases(pd.d)
    return {sid: bases[sid.k - 1].projectors[sid.j] for sid in stabilizer_ids(pd)}


def stabilizer_state(d: DimLike, sid: StabilizerStateId) -> np.ndarray:
    pd = as_prime_dim(d)
    sid.validate(pd)
    return _mub_bases(pd.d)[sid.k - 1].projectors[sid.j]


@dataclass(frozen=True)
class BlochVector:
    nx: float
    ny: float
    nz: float

    def __post_init__(self) -> None:
        if self.norm > 1 + BLOCH_NORM_SLACK:
            raise ValueError(f"Bloch vector norm {self.norm:.6f} exceeds 1")

    @classmethod
    def from_sequence(cls, values) -> "BlochVector":
        nx, ny, nz = (float(v) for v in values)
        return cls(nx, ny, nz)

    @classmethod
    def from_density(cls, rho: np.ndarray) -> "BlochVector":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError("Bloch vectors exist for qubit states only")
        return cls(
            float(2 * rho[0, 1].real),
            float(2 * rho[1, 0].imag),
            float((rho[0, 0] - rho[1, 1]).real),
        )

    @classmethod
    def vertex(cls, sid: StabilizerStateId) -> "BlochVector":
        sid.validate(2)
        components = [0.0, 0.0, 0.0]
        components[QUBIT_AXIS[sid.k]] = float((-1) ** sid.j)
        return cls(*components)

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    @property
    def norm(self) -> float:
        return math.sqrt(self.nx ** 2 + self.ny ** 2 + self.nz ** 2)

    @property
    def l1_norm(self) -> float:
        return abs(self.nx) + abs(self.ny) + abs(self.nz)

    @property
    def plane_excess(self) -> float:
        """l1 excess restricted to the XZ plane."""
        return max(0.0, abs(self.nx) + abs(self.nz) - 1.0)

    def density(self) -> np.ndarray:
        return 0.5 * np.array(
            [[1 + self.nz, self.nx - 1j * self.ny], [self.nx + 1j * self.ny, 1 - self.nz]],
            dtype=complex,
        )

    def stabilizer_id(self, tol: float = EQ_TOL) -> Optional[StabilizerStateId]:
        """The vertex this vector sits on, if any."""
        for sid in stabilizer_ids(2):
            if operators_close(self.as_array(), BlochVector.vertex(sid).as_array(), tol):
                return sid
        return None


def validate_density(rho: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"Density operator must be square, got shape {rho.shape}")
    hermitian_defect = float(np.abs(rho - rho.conj().T).max())
    if hermitian_defect > tol:
        raise ValueError(f"State is not Hermitian (defect {hermitian_defect:.3e})")
    trace_defect = abs(complex(np.trace(rho)) - 1)
    if trace_defect > tol:
        raise ValueError(f"State trace deviates from 1 by {trace_defect:.3e}")
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if min_eig < -tol:
        raise ValueError(f"State has negative eigenvalue {min_eig:.3e}")
    return rho


@dataclass(frozen=True)
class PolytopeCertificate:
    inside: bool
    weights: Optional[Dict[StabilizerStateId, float]] = None
    functional: Optional[np.ndarray] = None
    threshold: Optional[float] = None
    margin: float = 0.0
    residual: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"inside": self.inside}
        if self.weights is not None:
            data["weights"] = {str(sid): round(w, 12) for sid, w in self.weights.items() if w > EQ_TOL}
            data["residual"] = self.residual
        if self.functional is not None:
            data["functional"] = {"re": self.functional.real.tolist(), "im": self.functional.imag.tolist()}
            data["threshold"] = self.threshold
            data["margin"] = self.margin
        return data


@dataclass(frozen=True)
class MagicValue:
    value: float
    measure_name: str = MEASURE_NAME

    def to_dict(self) -> Dict[str, object]:
        return {"measure": self.measure_name, "value": self.value}


def _real_coordinates(matrix: np.ndarray) -> np.ndarray:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def _hermitian_basis(d: int) -> List[np.ndarray]:
    """Real-linear basis of d x d Hermitian matrices."""
    basis: List[np.ndarray] = []
    for a in range(d):
        for b in range(d):
            element = np.zeros((d, d), dtype=complex)
            if a == b:
                element[a, a] = 1.0
            elif a < b:
                element[a, b] = element[b, a] = 1 / math.sqrt(2)
            else:
                element[b, a] = 1j / math.sqrt(2)
                element[a, b] = -1j / math.sqrt(2)
            basis.append(element)
    return basis


def _excess_lp(d: int, rho: np.ndarray) -> Tuple[float, np.ndarray]:
    """min t s.t. sum u_i V_i = rho + t I/d, u >= 0, t >= 0."""
    vertices = list(stabilizer_vertices(d).values())
    n = len(vertices)
    identity = np.eye(d, dtype=complex) / d
    columns = [_real_coordinates(v) for v in vertices] + [-_real_coordinates(identity)]
    a_eq = np.column_stack(columns)
    b_eq = _real_coordinates(rho)
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(
        cost,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * (n + 1),
        method="highs",
        options=HIGHS_OPTIONS,
    )
    logger.debug("excess LP d=%d: status=%s t=%s", d, res.status, getattr(res, "x", None))
    if res.status != 0:
        raise PolytopeError(f"Excess LP failed for d={d}: status {res.status} ({res.message})")
    return float(res.x[-1]), np.asarray(res.x[:-1])


def _separating_functional(d: int, rho: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """max Tr(W rho) - c over Hermitian W with bounded coefficients and Tr(W V_i) <= c."""
    vertices = list(stabilizer_vertices(d).values())
    basis = _hermitian_basis(d)
    m = len(basis)
    # variables: h (m coefficients) then c
    rho_row = np.array([np.trace(b @ rho).real for b in basis])
    cost = np.concatenate([-rho_row, [1.0]])
    a_ub = np.array([[np.trace(b @ v).real for b in basis] + [-1.0] for v in vertices])
    b_ub = np.zeros(len(vertices))
    bounds = [(-1.0, 1.0)] * m + [(None, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs", options=HIGHS_OPTIONS)
    if res.status != 0:
        raise PolytopeError(f"Separation LP failed for d={d}: status {res.status} ({res.message})")
    coefficients = res.x[:m]
    functional = sum(c * b for c, b in zip(coefficients, basis))
    threshold = float(res.x[-1])
    margin = float(np.trace(functional @ rho).real) - threshold
    return functional, threshold, margin


def _polish_weights(vertices: List[np.ndarray], rho: np.ndarray, raw: np.ndarray) -> np.ndarray:
    """Re-solve the equalities on the LP support; keep the LP weights if that goes negative."""
    weights = np.clip(raw, 0.0, None)
    weights = weights / weights.sum()
    support = np.flatnonzero(weights > EQ_TOL)
    system = np.column_stack([_real_coordinates(vertices[i]) for i in support])
    system = np.vstack([system, np.ones(len(support))])
    target = np.concatenate([_real_coordinates(rho), [1.0]])
    refined, *_ = np.linalg.lstsq(system, target, rcond=None)
    if refined.min() < 0.0:
        return weights
    polished = np.zeros_like(weights)
    polished[support] = refined
    return polished


def polytope_membership(d: DimLike, rho: np.ndarray, tol: float = DEFAULT_TOL) -> PolytopeCertificate:
    """Decide rho in St_d, returning convex weights or a separating functional."""
    pd = as_prime_dim(d)
    rho = validate_density(rho, tol)
    if rho.shape[0] != pd.d:
        raise ValueError(f"State dimension {rho.shape[0]} does not match d={pd.d}")
    excess, unnormalized = _excess_lp(pd.d, rho)
    vertices = stabilizer_vertices(pd.d)
    if excess <= tol:
        weights = _polish_weights(list(vertices.values()), rho, unnormalized)
        reconstruction = sum(w * v for w, v in zip(weights, vertices.values()))
        residual = float(np.abs(reconstruction - rho).max())
        if residual > RECONSTRUCTION_TOL + excess:
            raise PolytopeError(
                f"Membership weights reconstruct the state only to {residual:.3e}; LP ill-conditioned"
            )
        return PolytopeCertificate(
            inside=True,
            weights={sid: float(w) for sid, w in zip(vertices, weights)},
            residual=residual,
        )

    functional, threshold, margin = _separating_functional(pd.d, rho)
    worst_vertex = max(float(np.trace(functional @ v).real) for v in vertices.values())
    if margin <= 0.0 or worst_vertex > threshold + RECONSTRUCTION_TOL:
        raise PolytopeError(
            f"Separating functional failed verification (margin {margin:.3e}, "
            f"vertex excess {worst_vertex - threshold:.3e}) although excess LP gave t={excess:.3e}"
        )
    return PolytopeCertificate(inside=False, functional=functional, threshold=threshold, margin=margin)


def magic_l1(d: DimLike, rho: np.ndarray, tol: float = DEFAULT_TOL) -> MagicValue:
    """Minimal t >= 0 with (rho + t I/d)/(1 + t) in St_d; closed form at d=2."""
    pd = as_prime_dim(d)
    rho = validate_density(rho, tol)
    if pd.d == 2:
        bloch = BlochVector.from_density(rho)
        return MagicValue(max(0.0, bloch.l1_norm - 1.0))
    excess, _ = _excess_lp(pd.d, rho)
    return MagicValue(max(0.0, excess))


def magic_l1_lp(d: DimLike, rho: np.ndarray, tol: float = DEFAULT_TOL) -> MagicValue:
    """LP evaluation of the measure for every d, including qubits."""
    pd = as_prime_dim(d)
    rho = validate_density(rho, tol)
    excess, _ = _excess_lp(pd.d, rho)
    return MagicValue(max(0.0, excess))


def state_from_json(payload: Mapping[str, object], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Accept a dense operator or a qubit Bloch vector."""
    if "bloch" in payload:
        return BlochVector.from_sequence(payload["bloch"]).density()
    return validate_density(operator_from_json(payload), tol)
