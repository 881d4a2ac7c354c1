"""
Brute-force reference implementations.

Nothing here goes through the matrix-free machinery: operators are expanded
with ``np.kron``, evolution uses full diagonalization and derivatives use
finite-difference stencils. Sizes are capped so these stay desk-scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .axis import DomainError

__all__ = [
    "ORACLE_BUDGET",
    "Trajectory",
    "SVDKernel",
    "evolve_exact",
    "kron_expand",
    "dense_svd_kernel",
    "finite_difference_residual",
]

ORACLE_BUDGET = 512


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)

    def __iter__(self):
        return iter(zip(self.times, self.states))


def evolve_exact(H, psi0, times) -> Trajectory:
    """``ψ(t) = exp(−i H t) ψ₀`` through the eigendecomposition of ``H``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("H must be square")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-12:
        raise DomainError("H must be hermitian")
    w, U = np.linalg.eigh(H)
    c = U.conj().T @ np.asarray(psi0, dtype=complex)
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, w))
    return Trajectory(times, (phases * c[None, :]) @ U.T)


def _stage_matrix(stage, shape) -> np.ndarray:
    n = int(np.prod(shape))
    if not isinstance(stage, dict):
        vals = np.broadcast_to(stage, shape).reshape(-1)
        return np.diag(vals.astype(complex))
    # one factor per slot (or per joint group), identity elsewhere
    factors = [np.eye(d, dtype=complex) for d in shape]
    joint = {}
    for key, m in stage.items():
        slots = key if isinstance(key, tuple) else (key,)
        if len(slots) == 1:
            factors[slots[0]] = factors[slots[0]] @ m
        else:
            joint[slots[0]] = (slots, m)
    out = np.eye(1, dtype=complex)
    s = 0
    while s < len(shape):
        if s in joint:
            slots, m = joint[s]
            out = np.kron(out, m)
            s = slots[-1] + 1
        else:
            out = np.kron(out, factors[s])
            s += 1
    assert out.shape == (n, n)
    return out


def kron_expand(op, budget: int = ORACLE_BUDGET) -> np.ndarray:
    """Dense matrix of a product operator by explicit Kronecker products."""
    shape = op.space.shape
    n = int(np.prod(shape))
    if n > budget:
        raise DomainError(f"oracle budget {budget} exceeded (total_dim {n})")
    total = np.zeros((n, n), dtype=complex)
    for coef, stages in op.terms:
        M = np.eye(n, dtype=complex)
        for st in stages:
            M = M @ _stage_matrix(st, shape)
        total += coef * M
    return total


@dataclass(frozen=True)
class SVDKernel:
    """Singular values (ascending) and right singular vectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def dense_svd_kernel(C, budget: int = ORACLE_BUDGET) -> SVDKernel:
    """Full SVD of the stacked constraints ``[J_H; J_P1; ...]``."""
    A = np.vstack([kron_expand(J, budget) for J in C.operators])
    _, s, Vh = np.linalg.svd(A, full_matrices=False)
    order = np.argsort(s, kind="stable")
    return SVDKernel(s[order], Vh.conj().T[:, order])


def _second_difference(psi: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(psi, -1, axis) - 2 * psi + np.roll(psi, 1, axis)) / (h * h)


def finite_difference_residual(grid, m: float) -> float:
    """``‖(∂_t² − ∇² + m²) Ψ‖`` with periodic second-order stencils.

    ``grid`` is a spinless wavefunction grid.
    """
    space = grid.space
    if space.spin_dim != 1:
        raise DomainError("finite_difference_residual needs spin_dim = 1")
    psi = np.asarray(grid.values)[..., 0]
    out = m * m * psi
    for ax, a in enumerate(space.axes):
        d2 = _second_difference(psi, ax, a.spacing)
        out = out + (d2 if a.role == "time" else -d2)
    return float(np.linalg.norm(out))
