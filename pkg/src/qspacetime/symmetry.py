"""
Lorentz boosts and U(1) gauge transformations.

Boosts act on eigenvalue labels and on constraint operators built over a
primed lattice of the same shape; no resampling unitary is constructed. Gauge
transformations are coordinate-diagonal phases ``U₁ = exp(−iλ)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .axis import DomainError, momentum_op
from .constraint import ConstraintSet, ScalarField, check_grid_momentum, dispersion, momentum_ops
from .product import ProductOperator, ProductSpace, StateVector, diagonal, identity
from .solve import snap_frequency
from .spinor import METRIC

__all__ = [
    "BoostParams",
    "GaugeTransform",
    "boost",
    "compose_velocities",
    "boost_labels",
    "boosted_constraints_mixed",
    "decouple_boosted",
    "recombine_residual",
    "gauge_transform",
    "apply_gauge",
    "conjugate_gauge",
    "gauge_momentum_shift_residual",
]

_AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class BoostParams:
    v: float
    gamma: float
    axis: str
    Lambda: np.ndarray

    @property
    def axis_index(self) -> int:
        return _AXES.index(self.axis)


def boost(v: float, axis: str = "x") -> BoostParams:
    """Pure boost with velocity ``v`` (``|v| < 1``) along ``axis``.

    ``Λ`` mixes the time row/column with the boost axis and is the identity on
    the transverse directions.
    """
    if axis not in _AXES:
        raise DomainError(f"boost axis must be one of {_AXES}, got {axis!r}")
    if not np.isfinite(v) or abs(v) >= 1:
        raise DomainError(f"boost velocity must satisfy |v| < 1, got {v!r}")
    g = 1.0 / np.sqrt(1.0 - v * v)
    j = 1 + _AXES.index(axis)
    L = np.eye(4)
    L[0, 0] = L[j, j] = g
    L[0, j] = L[j, 0] = -g * v
    if np.max(np.abs(L.T @ METRIC @ L - METRIC)) > 1e-12 or abs(np.linalg.det(L) - 1) > 1e-12:
        raise DomainError("boost matrix failed the Lorentz checks")
    L.setflags(write=False)
    return BoostParams(float(v), float(g), axis, L)


def compose_velocities(v1: float, v2: float) -> float:
    """Relativistic addition of collinear velocities."""
    return (v1 + v2) / (1 + v1 * v2)


def boost_labels(E: float, k, params: BoostParams):
    """``(E′, k′)`` with ``E′ = ΓE − Γv k_a`` and ``k′_a = Γk_a − ΓvE``."""
    k = np.asarray(k, dtype=float).reshape(-1)
    k = np.concatenate([k, np.zeros(3 - k.size)])
    out = params.Lambda @ np.concatenate([[E], k])
    return float(out[0]), out[1:]


def _boost_slot(space: ProductSpace, params: BoostParams) -> None:
    if params.axis not in [a.role for a in space.spatial_axes]:
        raise DomainError(f"space has no {params.axis} axis to boost along")


def boosted_constraints_mixed(space: ProductSpace, k, m: float, params: BoostParams) -> ConstraintSet:
    """Klein-Gordon constraints rewritten in primed operators.

    ``J′_H = Γ p_t′ − Γv p_a′ + E(k)`` and ``J′_Pa = Γ p_a′ − Γv p_t′ − k_a``;
    transverse momentum constraints are unchanged. The primed lattice has the
    same shape as ``space``.
    """
    _boost_slot(space, params)
    if space.spin_dim != 1:
        raise DomainError("boosted Klein-Gordon constraints are spinless")
    k = check_grid_momentum(space, k)
    E = dispersion(k, m)
    P = momentum_ops(space)
    g, v, a = params.gamma, params.v, params.axis
    one = identity(space)
    J_H = (g * P["time"] - g * v * P[a] + E * one).with_hermitian()
    J_P = []
    for ax in space.spatial_axes:
        kj = k[_AXES.index(ax.role)]
        if ax.role == a:
            J_P.append((g * P[a] - g * v * P["time"] - kj * one).with_hermitian())
        else:
            J_P.append((P[ax.role] - kj * one).with_hermitian())
    E_b, k_b = boost_labels(E, k, params)
    params_out = {
        "kind": "kg-boost-mixed",
        "k": k,
        "m": float(m),
        "E_exact": E,
        "branch": "+",
        "boost": params,
        "E_boosted": E_b,
        "k_boosted": k_b,
    }
    return ConstraintSet(space, J_H, tuple(J_P), params_out)


def decouple_boosted(mixed: ConstraintSet, params: BoostParams) -> ConstraintSet:
    """Substitute the mixed constraints into each other.

    The result is ``p_t′ + E′`` and ``p_a′ − k′_a`` (transverse constraints
    unchanged). The operators use the exact boosted labels so that
    ``Γ J_H^dec − Γv J_Pa^dec`` equals the mixed ``J′_H`` identically; the
    time-grid snap of ``E′`` is recorded in ``params``.
    """
    if mixed.params.get("kind") != "kg-boost-mixed":
        raise DomainError("decouple_boosted needs a set from boosted_constraints_mixed")
    if mixed.params["boost"] is not params and mixed.params["boost"].v != params.v:
        raise DomainError("boost parameters do not match the mixed set")
    space = mixed.space
    E_b, k_b = mixed.params["E_boosted"], mixed.params["k_boosted"]
    P = momentum_ops(space)
    one = identity(space)
    J_H = (P["time"] + E_b * one).with_hermitian()
    J_P = []
    for ax, J_mixed in zip(space.spatial_axes, mixed.J_P):
        if ax.role == params.axis:
            J_P.append((P[ax.role] - k_b[_AXES.index(ax.role)] * one).with_hermitian())
        else:
            J_P.append(J_mixed)
    E_snap, err = snap_frequency(space.time_axis, E_b)
    a = space.axis(params.axis)
    out = {
        "kind": "kg",
        "k": k_b,
        "m": mixed.params["m"],
        "branch": "+",
        "E_exact": E_b,
        "E_snap": E_snap,
        "snap_error": err,
        "E_used": E_b,
        "snapped": False,
        "k_on_grid": a.on_grid(k_b[params.axis_index]),
        "boost": params,
    }
    return ConstraintSet(space, J_H, tuple(J_P), out)


def recombine_residual(mixed: ConstraintSet, decoupled: ConstraintSet, params: BoostParams,
                       trials: int = 20, seed: int = 0) -> float:
    """Largest ``‖(Γ J_H^dec − Γv J_Pa^dec − J′_H) w‖`` and its ``J′_Pa`` analogue.

    Taken over ``trials`` random unit vectors ``w``.
    """
    from .product import apply, random_state

    g, v = params.gamma, params.v
    j = [ax.role for ax in mixed.space.spatial_axes].index(params.axis)
    H_rec = g * decoupled.J_H - g * v * decoupled.J_P[j]
    P_rec = g * decoupled.J_P[j] - g * v * decoupled.J_H
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        w = random_state(mixed.space, rng)
        worst = max(
            worst,
            (apply(H_rec, w) - apply(mixed.J_H, w)).norm(),
            (apply(P_rec, w) - apply(mixed.J_P[j], w)).norm(),
        )
    return worst


# -- U(1) ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """``U₁ = exp(−iλ(t, x))`` on a space, with spectral gradients of ``λ``.

    ``gradients`` maps each axis role to ``∂λ`` sampled on the grid.
    """

    space: ProductSpace
    field: ScalarField
    phases: np.ndarray
    gradients: dict

    def operator(self) -> ProductOperator:
        """``U₁`` as a diagonal product operator."""
        return diagonal(self.phases, self.space, hermitian=False)


def _spectral_gradient(w: np.ndarray, axis_obj, ax: int) -> np.ndarray:
    # ∂λ = Im(w̄ ∂w) for w = exp(iλ); exact for lattice-linear λ
    P = momentum_op(axis_obj).matrix
    Pw = np.moveaxis(np.tensordot(P, w, axes=([1], [ax])), 0, ax)
    return np.real(np.conj(w) * Pw)


def gauge_transform(space: ProductSpace, lam: ScalarField, periodic_atol: float = 1e-9) -> GaugeTransform:
    """Build ``U₁`` from a sampled gauge function.

    When ``lam`` remembers the function it was sampled from, the phase
    ``exp(iλ)`` must repeat after one lattice extent along every axis;
    otherwise :class:`DomainError` is raised.
    """
    if lam.space != space:
        raise DomainError("gauge function is sampled on a different space")
    if lam.func is not None:
        X = space.coordinates()
        base = np.exp(1j * np.broadcast_to(lam.func(*X), space.grid_shape))
        for i, a in enumerate(space.axes):
            Y = list(X)
            Y[i] = X[i] + a.extent
            shifted = np.exp(1j * np.broadcast_to(lam.func(*Y), space.grid_shape))
            if np.max(np.abs(shifted - base)) > periodic_atol:
                raise DomainError(f"exp(iλ) is not periodic along the {a.role} axis")
    w = np.exp(1j * lam.values)
    grads = {a.role: _spectral_gradient(w, a, i) for i, a in enumerate(space.axes)}
    phases = np.exp(-1j * lam.values)
    phases.setflags(write=False)
    return GaugeTransform(space, lam, phases, grads)


def apply_gauge(g: GaugeTransform, v: StateVector) -> StateVector:
    """``ψ′ = U₁† ψ``: multiply by ``exp(iλ)`` pointwise."""
    if v.space != g.space:
        raise DomainError("state and gauge transform live on different spaces")
    psi = v.tensor() * np.conj(g.phases)[..., None]
    return StateVector(v.space, psi.reshape(-1))


def conjugate_gauge(g: GaugeTransform, op: ProductOperator) -> ProductOperator:
    """``U₁† op U₁`` as a matrix-free sandwich."""
    if op.space != g.space:
        raise DomainError("operator and gauge transform live on different spaces")
    U = g.operator()
    Ud = diagonal(np.conj(g.phases), g.space, hermitian=False)
    return (Ud @ op @ U).with_hermitian(op.hermitian)


def gauge_momentum_shift_residual(g: GaugeTransform, slot: str, n_probes: int = 3, seed: int = 0) -> float:
    """Largest ``‖(U₁† P U₁ − P + ∂λ) w‖`` over band-limited unit probes ``w``.

    Probes are random along every other slot and confined to the lowest third
    of the momentum spectrum (by ``|κ|``) along ``slot``.
    """
    from .product import apply, embed

    space = g.space
    s = space.slot(slot)
    a = space.axis(slot)
    P = embed(momentum_op(a), slot, space)
    lhs = conjugate_gauge(g, P) - P + diagonal(g.gradients[a.role], space)
    rng = np.random.default_rng(seed)
    band = np.abs(a.momenta) <= np.max(np.abs(a.momenta)) / 3
    n_idx = np.flatnonzero(band)
    waves = np.exp(1j * np.outer(a.positions, a.momenta[n_idx]))  # (d, n_band)
    worst = 0.0
    for _ in range(n_probes):
        shape = list(space.shape)
        shape[s] = n_idx.size
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        psi = np.moveaxis(np.tensordot(waves, c, axes=([1], [s])), 0, s)
        w = StateVector(space, psi.reshape(-1)).normalize()
        worst = max(worst, apply(lhs, w).norm())
    return worst
