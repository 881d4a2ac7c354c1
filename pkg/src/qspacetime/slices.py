"""
Conditioning global states on coordinate eigenstates.

``Ψ(t, x) = (⟨t| ⊗ ⟨x|) |Ψ⟩⟩`` is just an index into the amplitude tensor, so
conditioning is a reshape. The translation checks use the same spectral
derivatives that define the constraint momenta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .axis import DomainError, momentum_op
from .product import ProductSpace, StateVector

__all__ = [
    "WavefunctionGrid",
    "SliceCheck",
    "condition",
    "wavefunction_grid",
    "temporal_translation_residual",
    "spatial_translation_residual",
    "slice_evolution_check",
    "packet_positions",
    "group_velocity",
]

_NORM_SPREAD = 1e-6


@dataclass(frozen=True, eq=False)
class WavefunctionGrid:
    """Amplitudes indexed ``[t, x, (y, z,) spin]`` together with their space."""

    space: ProductSpace
    values: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def to_state(self) -> StateVector:
        return StateVector(self.space, self.values.reshape(-1))

    def slice(self, t_index: int) -> np.ndarray:
        """Flattened amplitudes on the non-time factor at one time index."""
        return self.values[t_index].reshape(-1)


def wavefunction_grid(v: StateVector) -> WavefunctionGrid:
    return WavefunctionGrid(v.space, v.tensor().copy())


def condition(v: StateVector, t_index: int, x_indices) -> np.ndarray:
    """Spin amplitudes of ``v`` at grid point ``(t_index, *x_indices)``."""
    space = v.space
    idx = (t_index,) + tuple(np.atleast_1d(x_indices).tolist())
    if len(idx) != len(space.axes):
        raise DomainError(f"need {len(space.axes)} grid indices, got {len(idx)}")
    for i, a in zip(idx, space.axes):
        if int(i) != i or not 0 <= i < a.size:
            raise DomainError(f"index {i} out of range for the {a.role} axis (size {a.size})")
    return v.tensor()[tuple(int(i) for i in idx)].copy()


def _derivative(psi: np.ndarray, P: np.ndarray, slot: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(P, psi, axes=([1], [slot])), 0, slot)


def temporal_translation_residual(v: StateVector, E_eff: float) -> float:
    """``‖(P_t + E_eff) Ψ‖`` with the spectral time momentum.

    Zero exactly when ``i ∂_t Ψ = E_eff Ψ`` on the lattice.
    """
    psi = v.tensor()
    out = _derivative(psi, momentum_op(v.space.time_axis).matrix, 0) + E_eff * psi
    return float(np.linalg.norm(out))


def spatial_translation_residual(v: StateVector, k) -> float:
    """``‖(P_j − k_j) Ψ‖`` over the spatial axes, combined in quadrature."""
    space = v.space
    k = np.asarray(k, dtype=float).reshape(-1)
    k = np.concatenate([k, np.zeros(3 - k.size)])
    psi = v.tensor()
    total = 0.0
    for slot, a in enumerate(space.axes):
        if a.role == "time":
            continue
        kj = k["xyz".index(a.role)]
        out = _derivative(psi, momentum_op(a).matrix, slot) - kj * psi
        total += float(np.sum(np.abs(out) ** 2))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class SliceCheck:
    """Per-slice comparison against exact evolution.

    ``fidelities[i]`` is ``nan`` for slices listed in ``skipped`` (zero norm).
    ``norms`` holds the per-slice norms; ``norms_vary`` flags a spread above
    ``1e-6`` relative to the mean.
    """

    times: np.ndarray
    fidelities: np.ndarray
    norms: np.ndarray
    skipped: tuple
    norms_vary: bool

    @property
    def min_fidelity(self) -> float:
        f = self.fidelities[~np.isnan(self.fidelities)]
        return float(np.min(f)) if f.size else float("nan")


def slice_evolution_check(
    v: StateVector, H_eff, t_ref: int = 0, window=None
) -> SliceCheck:
    """Compare each slice ``ψ(t)`` with ``exp(−i H_eff (t − t_ref)) ψ(t_ref)``.

    Parameters
    ----------
    v : StateVector
        Global state, usually a history state.
    H_eff : (n, n) array
        Hermitian matrix on the non-time factor.
    t_ref : int
        Index of the reference slice.
    window : sequence of int, optional
        Time indices to check; all by default.
    """
    from .oracle import evolve_exact

    space = v.space
    grid = wavefunction_grid(v)
    rest = space.total_dim // space.time_axis.size
    H = np.asarray(H_eff, dtype=complex)
    if H.shape != (rest, rest):
        raise DomainError(f"H_eff must be {rest}x{rest}, got {H.shape}")
    idx = np.arange(space.time_axis.size) if window is None else np.asarray(window, dtype=int)
    t = space.time_axis.positions
    psi0 = grid.slice(t_ref)
    n0 = np.linalg.norm(psi0)
    if n0 == 0:
        raise DomainError("reference slice has zero norm")
    traj = evolve_exact(H, psi0, t[idx] - t[t_ref])
    fids = np.full(idx.size, np.nan)
    norms = np.zeros(idx.size)
    skipped = []
    for i, (ti, ref) in enumerate(zip(idx, traj.states)):
        psi = grid.slice(ti)
        norms[i] = np.linalg.norm(psi)
        if norms[i] == 0:
            skipped.append(int(ti))
            continue
        fids[i] = abs(np.vdot(psi, ref)) / (norms[i] * np.linalg.norm(ref))
    spread = (norms.max() - norms.min()) / max(norms.mean(), 1e-300)
    return SliceCheck(t[idx], fids, norms, tuple(skipped), bool(spread > _NORM_SPREAD))


def packet_positions(v: StateVector, axis: str = "x") -> np.ndarray:
    """Peak position of the marginal ``|Ψ(t, x_a)|²`` at every time index.

    The peak is refined by a periodic three-point parabola and unwrapped
    across the ring so that a moving packet gives a continuous track.
    """
    space = v.space
    s = space.slot(axis)
    a = space.axis(axis)
    prob = np.abs(v.tensor()) ** 2
    other = tuple(i for i in range(1, prob.ndim) if i != s)
    marg = prob.sum(axis=other)  # (d_t, d_a)
    j = np.argmax(marg, axis=1)
    rows = np.arange(marg.shape[0])
    y0 = marg[rows, (j - 1) % a.size]
    y1 = marg[rows, j]
    y2 = marg[rows, (j + 1) % a.size]
    denom = y0 - 2 * y1 + y2
    frac = np.where(denom != 0, 0.5 * (y0 - y2) / np.where(denom == 0, 1, denom), 0.0)
    x = a.positions[0] + (j + frac) * a.spacing
    return np.unwrap(x, period=a.extent)


def group_velocity(v: StateVector, window, axis: str = "x") -> float:
    """Least-squares slope of the packet track over the time indices ``window``."""
    idx = np.asarray(window, dtype=int)
    t = v.space.time_axis.positions[idx]
    x = packet_positions(v, axis)[idx]
    return float(np.polyfit(t, np.unwrap(x, period=v.space.axis(axis).extent), 1)[0])
