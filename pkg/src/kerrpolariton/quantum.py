"""Dense operator algebra on truncated Fock and qubit spaces.

Conventions
-----------
* Tensor factors are ordered ``(spin 1, spin 2 if present, bosons...)`` and
  Kronecker products follow that order, so slot 0 is the leftmost factor.
* Qubit basis is ``(excited, ground)``: ``sigma_z = diag(1, -1)`` and
  ``sigma_plus = |e><g|``.
* Fock basis is ``|0>, |1>, ..., |d-1>``.

Operators and states are immutable: the wrapped arrays are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from typing import Sequence

import numpy as np

from .errors import InvalidDimensionError, LayoutError, SpaceMismatchError, ValidationError

__all__ = [
    "SpaceDescriptor",
    "Operator",
    "QuantumState",
    "annihilation",
    "creation",
    "number",
    "identity",
    "pauli",
    "embed",
    "add",
    "scale",
    "multiply",
    "adjoint",
    "commutator",
    "expectation",
    "basis_ket",
    "product_ket",
    "density_matrix",
]

QUBIT_EXCITED = 0
QUBIT_GROUND = 1


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered tensor-product layout.

    ``labels`` name each factor (``"spin1"``, ``"lp"``, ...). Builders use them
    to refuse a space whose layout does not match what they construct.
    """

    factors: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        factors = tuple(int(f) for f in self.factors)
        if not factors:
            raise InvalidDimensionError("space needs at least one factor")
        if any(f < 2 for f in factors):
            raise InvalidDimensionError(f"every factor dimension must be >= 2, got {factors}")
        object.__setattr__(self, "factors", factors)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(factors):
                raise InvalidDimensionError("labels must match factors one-to-one")
            if len(set(labels)) != len(labels):
                raise InvalidDimensionError(f"duplicate factor labels {labels}")
            object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return prod(self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def slot(self, label: str) -> int:
        if self.labels is None or label not in self.labels:
            raise LayoutError(f"space {self} has no factor labelled {label!r}")
        return self.labels.index(label)

    def has(self, label: str) -> bool:
        return self.labels is not None and label in self.labels

    def require_layout(self, labels: Sequence[str]) -> None:
        if self.labels != tuple(labels):
            raise LayoutError(f"expected layout {tuple(labels)}, got {self.labels}")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix acting on ``space``."""

    space: SpaceDescriptor
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _readonly(self.matrix)
        n = self.space.dim
        if m.shape != (n, n):
            raise InvalidDimensionError(f"matrix shape {m.shape} does not match space dimension {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    def _check(self, other: Operator) -> None:
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if other.space.factors != self.space.factors:
            raise SpaceMismatchError(f"{self.space.factors} vs {other.space.factors}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return Operator(self.space, complex(c) * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def dag(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        m = self.matrix
        scale = max(np.abs(m).max(), 1.0e-300)
        return bool(np.abs(m - m.conj().T).max() <= rtol * scale)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector (1-D ``data``) or density matrix (2-D ``data``)."""

    space: SpaceDescriptor
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = _readonly(self.data)
        n = self.space.dim
        if d.ndim == 1 and d.shape == (n,):
            pass
        elif d.ndim == 2 and d.shape == (n, n):
            pass
        else:
            raise InvalidDimensionError(f"state shape {d.shape} does not match space dimension {n}")
        object.__setattr__(self, "data", d)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def validate(self, tol: float = 1e-10, eig_tol: float = 1e-8) -> QuantumState:
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > tol:
                raise ValidationError(f"pure state norm {norm} deviates from 1")
            return self
        rho = self.data
        tr = np.trace(rho)
        if abs(tr - 1.0) > tol:
            raise ValidationError(f"density matrix trace {tr} deviates from 1")
        if np.abs(rho - rho.conj().T).max() > tol:
            raise ValidationError("density matrix is not Hermitian")
        lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if lo < -eig_tol:
            raise ValidationError(f"density matrix has negative eigenvalue {lo}")
        return self


# -- elementary operators ---------------------------------------------------

def _single(dim: int, m: np.ndarray, label: str | None = None) -> Operator:
    labels = None if label is None else (label,)
    return Operator(SpaceDescriptor((dim,), labels), m)


def annihilation(dim: int) -> Operator:
    """Truncated ladder operator with ``<n-1|a|n> = sqrt(n)``."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    dim = int(dim)
    return _single(dim, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1))


def creation(dim: int) -> Operator:
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    if dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    return _single(int(dim), np.diag(np.arange(dim, dtype=float)))


def identity(space: SpaceDescriptor | int) -> Operator:
    if not isinstance(space, SpaceDescriptor):
        space = SpaceDescriptor((int(space),))
    return Operator(space, np.eye(space.dim))


_PAULI = {
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def pauli(kind: str) -> Operator:
    """``kind`` is one of ``z``, ``plus``, ``minus`` (also ``x``, ``y``)."""
    try:
        return _single(2, _PAULI[kind])
    except KeyError:
        raise ValidationError(f"unknown Pauli kind {kind!r}") from None


def embed(op: Operator | np.ndarray, slot: int, space: SpaceDescriptor) -> Operator:
    """Place ``op`` on factor ``slot`` of ``space``, identity elsewhere."""
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if not 0 <= slot < len(space):
        raise LayoutError(f"slot {slot} out of range for {len(space)} factors")
    if m.shape != (space.factors[slot],) * 2:
        raise InvalidDimensionError(
            f"operator of dimension {m.shape[0]} does not fit factor {slot} of dimension {space.factors[slot]}"
        )
    mats = [np.eye(f) for f in space.factors]
    mats[slot] = m
    return Operator(space, reduce(np.kron, mats))


# -- functional arithmetic ----------------------------------------------------

def add(a: Operator, b: Operator) -> Operator:
    return a + b


def scale(a: Operator, c: complex) -> Operator:
    return a * c


def multiply(a: Operator, b: Operator) -> Operator:
    return a @ b


def adjoint(a: Operator) -> Operator:
    return a.dag()


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def expectation(op: Operator, state: QuantumState) -> complex:
    if op.space.factors != state.space.factors:
        raise SpaceMismatchError(f"{op.space.factors} vs {state.space.factors}")
    if state.is_pure:
        psi = state.data
        return complex(np.vdot(psi, op.matrix @ psi))
    return complex(np.trace(op.matrix @ state.data))


# -- states -------------------------------------------------------------------

def basis_ket(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"level {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def product_ket(space: SpaceDescriptor, levels: Sequence[int]) -> QuantumState:
    """Product basis state; qubit level 0 is excited, 1 is ground."""
    if len(levels) != len(space):
        raise LayoutError(f"need {len(space)} levels, got {len(levels)}")
    vecs = [basis_ket(d, n) for d, n in zip(space.factors, levels)]
    return QuantumState(space, reduce(np.kron, vecs))


def density_matrix(state: QuantumState) -> QuantumState:
    return QuantumState(state.space, state.density())
