"""
Tensor-product spaces and matrix-free product operators.

The global space is ``H_t ⊗ H_x [⊗ H_y ⊗ H_z] ⊗ H_spin``, stored row-major
with time slowest and spin fastest. Operators are sums of terms; each term is
an ordered chain of *stages* applied right to left. A stage is either

* a dict ``{slot: matrix}`` of slot-local factors (identity on absent slots),
  where a slot key may also be a tuple of contiguous slots acting jointly, or
* a diagonal field sampled over the whole grid (e.g. ``V(t, x)``), which may
  couple slots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Number
from typing import Sequence, Union

import numpy as np

from .axis import DomainError, FactorOp, LatticeAxis

__all__ = [
    "BudgetError",
    "DEFAULT_DENSE_BUDGET",
    "ProductSpace",
    "ProductOperator",
    "StateVector",
    "make_space",
    "embed",
    "diagonal",
    "identity",
    "apply",
    "commutator_residual",
    "dense",
    "random_state",
]

DEFAULT_DENSE_BUDGET = 4096


class BudgetError(ValueError):
    """Raised when dense materialization would exceed the configured budget."""


@dataclass(frozen=True)
class ProductSpace:
    axes: tuple[LatticeAxis, ...]
    spin_dim: int = 1

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes) + (self.spin_dim,)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_slots(self) -> int:
        return len(self.axes) + 1

    @property
    def time_axis(self) -> LatticeAxis:
        return self.axes[0]

    @property
    def spatial_axes(self) -> tuple[LatticeAxis, ...]:
        return self.axes[1:]

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(a.role for a in self.axes) + ("spin",)

    def slot(self, name: Union[str, int]) -> int:
        """Slot index of ``name`` (``"time"``, ``"x"``, ``"y"``, ``"z"``, ``"spin"``)."""
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.n_slots:
                raise DomainError(f"slot index {name} out of range")
            return int(name)
        try:
            return self.slot_names.index(name)
        except ValueError:
            raise DomainError(f"space has no {name!r} slot; slots are {self.slot_names}") from None

    def axis(self, name: Union[str, int]) -> LatticeAxis:
        i = self.slot(name)
        if i == len(self.axes):
            raise DomainError("the spin slot has no lattice axis")
        return self.axes[i]

    def coordinates(self) -> list[np.ndarray]:
        """Meshgrid coordinate arrays over the (t, x, ...) grid, ``ij`` indexing."""
        return np.meshgrid(*[a.positions for a in self.axes], indexing="ij")


def make_space(axes: Sequence[LatticeAxis], spin_dim: int = 1) -> ProductSpace:
    axes = tuple(axes)
    if not axes or axes[0].role != "time":
        raise DomainError("the first axis must be the time axis")
    spatial = axes[1:]
    if not 1 <= len(spatial) <= 3:
        raise DomainError(f"need 1 to 3 spatial axes, got {len(spatial)}")
    roles = [a.role for a in spatial]
    if "time" in roles or len(set(roles)) != len(roles):
        raise DomainError(f"spatial axes must be distinct spatial roles, got {roles}")
    order = {"x": 0, "y": 1, "z": 2}
    if roles != sorted(roles, key=order.__getitem__):
        raise DomainError(f"spatial axes must be ordered x, y, z; got {roles}")
    if int(spin_dim) != spin_dim or spin_dim < 1:
        raise DomainError(f"spin_dim must be a positive integer, got {spin_dim!r}")
    return ProductSpace(axes, int(spin_dim))


@dataclass(frozen=True, eq=False)
class StateVector:
    space: ProductSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != self.space.total_dim:
            raise DomainError(f"state has {a.size} amplitudes, space needs {self.space.total_dim}")
        object.__setattr__(self, "amplitudes", a)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def vdot(self, other: "StateVector") -> complex:
        _check_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to ``space.shape``."""
        return self.amplitudes.reshape(self.space.shape)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, c: Number) -> "StateVector":
        return StateVector(self.space, c * self.amplitudes)

    __rmul__ = __mul__


def random_state(space: ProductSpace, rng: np.random.Generator) -> StateVector:
    """Unit vector with i.i.d. complex Gaussian amplitudes."""
    a = rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)
    return StateVector(space, a).normalize()


def _check_space(a: ProductSpace, b: ProductSpace):
    if a != b:
        raise DomainError("operands live on different product spaces")


# A stage is either a dict of slot-local matrices or a diagonal field array.
Stage = Union[dict, np.ndarray]


def _slot_tuple(key) -> tuple[int, ...]:
    return key if isinstance(key, tuple) else (key,)


@dataclass(frozen=True, eq=False)
class ProductOperator:
    """Sum of ``coefficient · (stage_1 · stage_2 · ...)`` terms."""

    space: ProductSpace
    terms: tuple = field(default_factory=tuple)
    hermitian: bool = False

    def __add__(self, other: "ProductOperator") -> "ProductOperator":
        if isinstance(other, Number):
            other = other * identity(self.space)
        _check_space(self.space, other.space)
        return ProductOperator(self.space, self.terms + other.terms, self.hermitian and other.hermitian)

    __radd__ = __add__

    def __neg__(self) -> "ProductOperator":
        return (-1.0) * self

    def __sub__(self, other: "ProductOperator") -> "ProductOperator":
        return self + (-other)

    def __rsub__(self, other) -> "ProductOperator":
        return (-self) + other

    def __mul__(self, c: Number) -> "ProductOperator":
        if not isinstance(c, Number):
            return NotImplemented
        terms = tuple((c * coef, stages) for coef, stages in self.terms)
        return ProductOperator(self.space, terms, self.hermitian and np.imag(c) == 0)

    __rmul__ = __mul__

    def __matmul__(self, other: "ProductOperator") -> "ProductOperator":
        _check_space(self.space, other.space)
        terms = []
        for ca, sa in self.terms:
            for cb, sb in other.terms:
                terms.append((ca * cb, _concat_stages(sa, sb)))
        return ProductOperator(self.space, tuple(terms), False)

    def with_hermitian(self, flag: bool = True) -> "ProductOperator":
        """Same operator with the hermitian flag set (the caller vouches for it)."""
        return ProductOperator(self.space, self.terms, flag)

    def adjoint(self) -> "ProductOperator":
        terms = []
        for c, stages in self.terms:
            adj = []
            for st in reversed(stages):
                if isinstance(st, dict):
                    adj.append({k: m.conj().T for k, m in st.items()})
                else:
                    adj.append(st.conj())
            terms.append((np.conj(c), tuple(adj)))
        return ProductOperator(self.space, tuple(terms), self.hermitian)

    def __call__(self, v: StateVector) -> StateVector:
        return apply(self, v)


def _concat_stages(a: tuple, b: tuple) -> tuple:
    # merge a trailing local stage of ``a`` with a leading local stage of ``b``
    # when their slot groups do not partially overlap
    if a and b and isinstance(a[-1], dict) and isinstance(b[0], dict):
        left, right = a[-1], b[0]
        lslots = {k: set(_slot_tuple(k)) for k in left}
        rslots = {k: set(_slot_tuple(k)) for k in right}
        clash = any(
            lk != rk and ls & rs for lk, ls in lslots.items() for rk, rs in rslots.items()
        )
        if not clash:
            merged = dict(left)
            for k, m in right.items():
                merged[k] = merged[k] @ m if k in merged else m
            return a[:-1] + (merged,) + b[1:]
    return a + b


def _slot_dims(space: ProductSpace, key) -> int:
    slots = _slot_tuple(key)
    if list(slots) != list(range(slots[0], slots[0] + len(slots))):
        raise DomainError(f"joint slot group {slots} must be contiguous")
    return int(np.prod([space.shape[s] for s in slots]))


def embed(factor, slot, space: ProductSpace) -> ProductOperator:
    """Embed a single-slot factor, identity on every other slot.

    ``factor`` is a :class:`FactorOp` or a plain square matrix (e.g. a spin
    matrix). ``slot`` is a slot name or index, or a tuple of contiguous slots
    on which the matrix acts jointly.
    """
    hermitian = False
    if isinstance(factor, FactorOp):
        hermitian = factor.hermitian
        matrix = factor.matrix
    else:
        matrix = np.asarray(factor, dtype=complex)
        hermitian = matrix.ndim == 2 and np.allclose(matrix, matrix.conj().T, atol=1e-12, rtol=0)
    if isinstance(slot, tuple):
        key = tuple(space.slot(s) for s in slot)
        if len(key) == 1:
            key = key[0]
    else:
        key = space.slot(slot)
    dim = _slot_dims(space, key)
    if matrix.shape != (dim, dim):
        raise DomainError(f"factor of shape {matrix.shape} does not match slot dimension {dim}")
    if isinstance(factor, FactorOp) and not isinstance(key, tuple):
        if key == len(space.axes) or factor.axis != space.axes[key]:
            raise DomainError("factor axis does not match slot axis")
    return ProductOperator(space, ((1.0 + 0j, ({key: matrix},)),), hermitian)


def diagonal(values, space: ProductSpace, hermitian: bool | None = None) -> ProductOperator:
    """Operator diagonal in the coordinate basis.

    ``values`` has shape ``space.grid_shape`` (broadcast over spin) or the
    full ``space.shape``.
    """
    values = np.asarray(values)
    if values.shape == space.grid_shape:
        values = values[..., None]
    if values.shape not in (space.shape, space.grid_shape + (1,)):
        raise DomainError(f"diagonal field of shape {values.shape} does not match {space.shape}")
    values = values.astype(complex)
    if hermitian is None:
        hermitian = bool(np.all(values.imag == 0))
    return ProductOperator(space, ((1.0 + 0j, (values,)),), hermitian)


def identity(space: ProductSpace) -> ProductOperator:
    return ProductOperator(space, ((1.0 + 0j, ()),), True)


def _apply_stage(stage: Stage, psi: np.ndarray) -> np.ndarray:
    if not isinstance(stage, dict):
        return stage * psi
    for key, m in stage.items():
        slots = _slot_tuple(key)
        if len(slots) == 1:
            s = slots[0]
            psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [s])), 0, s)
        else:
            shape = psi.shape
            lead = int(np.prod(shape[: slots[0]]))
            mid = int(np.prod(shape[slots[0] : slots[-1] + 1]))
            tail = int(np.prod(shape[slots[-1] + 1 :]))
            block = psi.reshape(lead, mid, tail)
            psi = np.einsum("ab,ibj->iaj", m, block).reshape(shape)
    return psi


def _apply_array(op: ProductOperator, psi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi)
    for coef, stages in op.terms:
        if coef == 0:
            continue
        phi = psi
        for stage in reversed(stages):
            phi = _apply_stage(stage, phi)
        out = out + coef * phi
    return out


def apply(op: ProductOperator, v: StateVector) -> StateVector:
    """Matrix-free action of ``op`` on ``v``."""
    _check_space(op.space, v.space)
    psi = v.amplitudes.reshape(v.space.shape)
    return StateVector(v.space, _apply_array(op, psi).reshape(-1))


def apply_columns(op: ProductOperator, block: np.ndarray) -> np.ndarray:
    """Apply ``op`` to each column of a ``(total_dim, n)`` array."""
    shape = op.space.shape
    n = block.shape[1]
    psi = block.T.reshape((n,) + shape)
    # shift slot indices by one for the leading batch axis
    out = np.zeros_like(psi)
    for coef, stages in op.terms:
        if coef == 0:
            continue
        phi = psi
        for stage in reversed(stages):
            if isinstance(stage, dict):
                phi = _apply_stage({_shift_key(k): m for k, m in stage.items()}, phi)
            else:
                phi = stage[None, ...] * phi
        out = out + coef * phi
    return out.reshape(n, -1).T


def _shift_key(key):
    if isinstance(key, tuple):
        return tuple(k + 1 for k in key)
    return key + 1


def commutator_residual(
    A: ProductOperator, B: ProductOperator, trials: int = 5, seed: int = 0
) -> float:
    """Largest ``‖(AB − BA)v‖`` over ``trials`` random unit vectors."""
    _check_space(A.space, B.space)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = random_state(A.space, rng)
        r = apply(A, apply(B, v)) - apply(B, apply(A, v))
        worst = max(worst, r.norm())
    return worst


def dense(op: ProductOperator, budget: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
    """Explicit matrix of ``op``, built column by column from the matrix-free action."""
    n = op.space.total_dim
    if n > budget:
        raise BudgetError(f"total_dim {n} exceeds dense budget {budget}")
    return apply_columns(op, np.eye(n, dtype=complex))
