"""
Builders for Hamiltonian and momentum constraint operators.

Every builder returns a :class:`ConstraintSet`. Energies that must sit on the
time-axis momentum grid are snapped there at build time, and the exact value,
the snapped value and the snap error are all kept in ``params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .axis import DomainError, momentum_op
from .product import (
    ProductOperator,
    ProductSpace,
    commutator_residual,
    diagonal,
    embed,
    identity,
)
from .solve import snap_frequency
from .spinor import SpinorRep, alpha_beta, spinor_hamiltonian

__all__ = [
    "ConstraintSet",
    "ScalarField",
    "dispersion",
    "check_grid_momentum",
    "pw_constraint",
    "kg_constraints",
    "dirac_constraints",
    "nr_constraint",
    "two_particle_constraints",
    "kg_quadratic_op",
    "dirac_first_order_op",
    "dirac_covariant_op",
    "momentum_ops",
]

_SPATIAL = ("x", "y", "z")


def dispersion(k, m: float) -> float:
    """Relativistic energy ``sqrt(|k|² + m²)``."""
    k = np.asarray(k, dtype=float)
    return float(np.sqrt(np.dot(k, k) + m * m))


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    space: ProductSpace
    J_H: ProductOperator
    J_P: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def operators(self) -> tuple:
        return (self.J_H,) + tuple(self.J_P)

    @property
    def kind(self) -> str:
        return self.params["kind"]

    def max_commutator_residual(self, trials: int = 3, seed: int = 0) -> float:
        ops = self.operators
        worst = 0.0
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                worst = max(worst, commutator_residual(ops[i], ops[j], trials, seed))
        return worst


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real function sampled on the (t, x, ...) grid of a space.

    ``role`` is ``"potential"`` or ``"gauge"``. ``func``, when present, is the
    callable the samples came from; it is kept so transforms can check
    periodicity.
    """

    space: ProductSpace
    values: np.ndarray
    role: str = "potential"
    func: Optional[Callable] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.space.grid_shape:
            raise DomainError(f"field has shape {v.shape}, grid is {self.space.grid_shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field samples must be finite")
        if self.role not in ("potential", "gauge"):
            raise DomainError(f"unknown field role {self.role!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, space: ProductSpace, func: Callable, role: str = "potential") -> "ScalarField":
        """Sample ``func(t, x[, y, z])`` on the coordinate grid."""
        values = np.broadcast_to(func(*space.coordinates()), space.grid_shape)
        return cls(space, np.array(values, dtype=float), role, func)

    @classmethod
    def constant(cls, space: ProductSpace, c: float, role: str = "potential") -> "ScalarField":
        return cls.from_function(space, lambda *X: np.full(X[0].shape, float(c)), role)


def _full_k(space: ProductSpace, k) -> np.ndarray:
    k = np.zeros(3) if k is None else np.asarray(k, dtype=float).reshape(-1)
    if k.size > 3:
        raise DomainError("k has at most three components")
    return np.concatenate([k, np.zeros(3 - k.size)])


def check_grid_momentum(space: ProductSpace, k) -> np.ndarray:
    """Validate that every component of ``k`` lies on its axis momentum grid.

    Components along axes the space does not have must be zero.
    """
    k = _full_k(space, k)
    roles = [a.role for a in space.spatial_axes]
    for j, name in enumerate(_SPATIAL):
        if name in roles:
            space.axis(name).momentum_index(k[j])
        elif k[j] != 0:
            raise DomainError(f"k_{name} = {k[j]} but the space has no {name} axis")
    return k


def momentum_ops(space: ProductSpace) -> dict:
    """Embedded spectral momenta ``{"time": P_t, "x": P_x, ...}``."""
    return {a.role: embed(momentum_op(a), a.role, space) for a in space.axes}


def _energy_record(space: ProductSpace, E: float, snap: bool) -> dict:
    E_snap, err = snap_frequency(space.time_axis, E)
    return {
        "E_exact": E,
        "E_snap": E_snap,
        "snap_error": err,
        "E_used": E_snap if snap else E,
        "snapped": snap,
    }


def _check_branch(branch: str) -> int:
    if branch not in ("+", "-"):
        raise DomainError(f"branch must be '+' or '-', got {branch!r}")
    return 1 if branch == "+" else -1


def _momentum_constraints(space: ProductSpace, k: np.ndarray, P: dict) -> tuple:
    one = identity(space)
    return tuple(P[a.role] - k[_SPATIAL.index(a.role)] * one for a in space.spatial_axes)


def pw_constraint(space: ProductSpace, H_sys) -> ConstraintSet:
    """Clock constraint ``p_t ⊗ I + I ⊗ H_sys``.

    ``H_sys`` acts on everything except the time slot.
    """
    H = np.asarray(H_sys, dtype=complex)
    rest = space.total_dim // space.time_axis.size
    if H.shape != (rest, rest):
        raise DomainError(f"H_sys must be {rest}x{rest}, got {H.shape}")
    if np.max(np.abs(H - H.conj().T)) > 1e-12:
        raise DomainError("H_sys must be hermitian")
    rest_slots = tuple(range(1, space.n_slots))
    P_t = embed(momentum_op(space.time_axis), "time", space)
    J = (P_t + embed(H, rest_slots, space)).with_hermitian()
    return ConstraintSet(space, J, (), {"kind": "pw", "H_sys": H})


def kg_constraints(space: ProductSpace, k, m: float, branch: str = "+", snap: bool = True) -> ConstraintSet:
    """Klein-Gordon constraints ``J_H = p_t ± E(k)`` and ``J_Pj = p_j − k_j``.

    With ``snap=True`` (default) the energy in ``J_H`` is the time-grid
    neighbour of ``E(k)``, so the plane wave is an exact kernel vector.
    """
    if m < 0:
        raise DomainError("mass must be non-negative")
    sign = _check_branch(branch)
    k = check_grid_momentum(space, k)
    P = momentum_ops(space)
    rec = _energy_record(space, dispersion(k, m), snap)
    J_H = (P["time"] + sign * rec["E_used"] * identity(space)).with_hermitian()
    params = {"kind": "kg", "k": k, "m": float(m), "branch": branch, **rec}
    return ConstraintSet(space, J_H, _momentum_constraints(space, k, P), params)


def dirac_constraints(space: ProductSpace, k, m: float, rep: SpinorRep, snap: bool = True) -> ConstraintSet:
    """Dirac constraints ``J_H = p_t + Σ k_j α_j + m β`` and ``J_Pj = p_j − k_j``.

    The spin term is used as is; ``params`` records the time-grid energy the
    composed kernel state should use.
    """
    if space.spin_dim != 4:
        raise DomainError("Dirac constraints need spin_dim = 4")
    if m < 0:
        raise DomainError("mass must be non-negative")
    k = check_grid_momentum(space, k)
    P = momentum_ops(space)
    H_s = spinor_hamiltonian(k, m, rep)
    rec = _energy_record(space, dispersion(k, m), snap)
    J_H = (P["time"] + embed(H_s, "spin", space)).with_hermitian()
    params = {"kind": "dirac", "k": k, "m": float(m), "branch": "+", "rep": rep, "spin_term": H_s, **rec}
    return ConstraintSet(space, J_H, _momentum_constraints(space, k, P), params)


def nr_constraint(space: ProductSpace, m: float, V: Optional[ScalarField] = None) -> ConstraintSet:
    """Non-relativistic constraint ``p_t + Σ p_j²/2m + V(t, x)``.

    A t- or x-dependent ``V`` breaks translation symmetry, so these sets are
    exempt from the commutation invariant (``params["commuting"] = False``).
    """
    if space.spin_dim != 1:
        raise DomainError("the non-relativistic constraint is spinless")
    if not m > 0:
        raise DomainError("mass must be positive")
    P = momentum_ops(space)
    J = P["time"]
    for a in space.spatial_axes:
        p = momentum_op(a).matrix
        J = J + embed(p @ p / (2 * m), a.role, space)
    if V is not None:
        if V.space != space:
            raise DomainError("potential is sampled on a different space")
        J = J + diagonal(V.values, space)
    params = {"kind": "nr", "m": float(m), "V": V, "commuting": False}
    return ConstraintSet(space, J.with_hermitian(), (), params)


def two_particle_constraints(space: ProductSpace, E_tot: float, k_tot, snap: bool = True) -> ConstraintSet:
    """Total-energy and total-momentum constraints for two particles on one lattice."""
    if space.spin_dim != 1:
        raise DomainError("two-particle Klein-Gordon constraints are spinless")
    k = check_grid_momentum(space, k_tot)
    P = momentum_ops(space)
    rec = _energy_record(space, float(E_tot), snap)
    J_H = (P["time"] + rec["E_used"] * identity(space)).with_hermitian()
    params = {"kind": "kg2", "k": k, "branch": "+", **rec}
    return ConstraintSet(space, J_H, _momentum_constraints(space, k, P), params)


def kg_quadratic_op(space: ProductSpace, m: float) -> ProductOperator:
    """``p_t² − Σ_j p_j² − m²``."""
    op = -(m * m) * identity(space)
    for a in space.axes:
        p = momentum_op(a).matrix
        sign = 1.0 if a.role == "time" else -1.0
        op = op + sign * embed(p @ p, a.role, space)
    return op.with_hermitian()


def dirac_first_order_op(space: ProductSpace, m: float, rep: SpinorRep) -> ProductOperator:
    """``p_t ⊗ I + Σ_j p_j ⊗ α_j + m β``, with the explicit ``k`` eliminated."""
    ax, ay, az, beta = alpha_beta(rep)
    alphas = dict(zip(_SPATIAL, (ax, ay, az)))
    P = momentum_ops(space)
    op = P["time"] + m * embed(beta, "spin", space)
    for a in space.spatial_axes:
        op = op + P[a.role] @ embed(alphas[a.role], "spin", space)
    return op.with_hermitian()


def dirac_covariant_op(space: ProductSpace, m: float, rep: SpinorRep) -> ProductOperator:
    """``P_μ ⊗ γ^μ + m``."""
    if space.spin_dim != 4:
        raise DomainError("the covariant Dirac operator needs spin_dim = 4")
    g = dict(zip(("time",) + _SPATIAL, rep.gammas))
    P = momentum_ops(space)
    op = m * identity(space)
    for a in space.axes:
        op = op + P[a.role] @ embed(g[a.role], "spin", space)
    return op.with_hermitian(False)
