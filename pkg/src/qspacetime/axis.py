"""
Single-coordinate lattice algebra.

A :class:`LatticeAxis` is a periodic ring of ``d`` sites with spacing ``Δ``.
It carries two conjugate pairs: the Weyl (clock/shift) pair, for which
``UV = ωVU`` holds exactly, and the position/momentum pair, for which the
Heisenberg relation ``[X, P] = i`` holds only approximately on smooth states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "DomainError",
    "ROLES",
    "LatticeAxis",
    "FactorOp",
    "make_axis",
    "clock",
    "shift",
    "position_op",
    "momentum_op",
    "dft_matrix",
    "plane_wave",
]

ROLES = ("time", "x", "y", "z")

_FLAG_ATOL = 1e-12


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


@dataclass(frozen=True)
class LatticeAxis:
    """One discretized coordinate with centered position and momentum grids.

    Parameters
    ----------
    size : int
        Number of sites ``d`` (at least 2).
    spacing : float
        Lattice spacing ``Δ`` in coordinate units (ħ = c = 1).
    role : str
        One of ``"time"``, ``"x"``, ``"y"``, ``"z"``.
    """

    size: int
    spacing: float
    role: str

    @property
    def extent(self) -> float:
        return self.size * self.spacing

    @property
    def momentum_spacing(self) -> float:
        return 2 * np.pi / self.extent

    @cached_property
    def positions(self) -> np.ndarray:
        j = np.arange(self.size) - self.size // 2
        return j * self.spacing

    @cached_property
    def momenta(self) -> np.ndarray:
        n = np.arange(self.size) - self.size // 2
        return n * self.momentum_spacing

    def momentum_index(self, value: float, atol: float = 1e-9) -> int:
        """Index ``n`` of the momentum grid point equal to ``value``.

        Raises :class:`DomainError` if ``value`` is not on the grid.
        """
        q = value / self.momentum_spacing
        n = int(round(q))
        if abs(q - n) > atol or not (-(self.size // 2) <= n < self.size - self.size // 2):
            raise DomainError(
                f"momentum {value!r} is not on the {self.role} grid "
                f"(spacing {self.momentum_spacing:.6g})"
            )
        return n + self.size // 2

    def on_grid(self, value: float, atol: float = 1e-9) -> bool:
        try:
            self.momentum_index(value, atol)
        except DomainError:
            return False
        return True


def make_axis(d: int, spacing: float, role: str) -> LatticeAxis:
    """Build a validated :class:`LatticeAxis`."""
    if int(d) != d or d < 2:
        raise DomainError(f"axis size must be an integer >= 2, got {d!r}")
    if not np.isfinite(spacing) or spacing <= 0:
        raise DomainError(f"axis spacing must be positive, got {spacing!r}")
    if role not in ROLES:
        raise DomainError(f"unknown axis role {role!r}; expected one of {ROLES}")
    return LatticeAxis(int(d), float(spacing), role)


@dataclass(frozen=True, eq=False)
class FactorOp:
    """A ``d × d`` operator acting on a single axis.

    The ``hermitian`` and ``unitary`` flags are checked on construction.
    """

    axis: LatticeAxis
    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.axis.size
        if m.shape != (d, d):
            raise DomainError(f"factor matrix has shape {m.shape}, axis needs {(d, d)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.hermitian and np.max(np.abs(m - m.conj().T)) > _FLAG_ATOL:
            raise DomainError("matrix flagged hermitian is not hermitian")
        if self.unitary and np.max(np.abs(m.conj().T @ m - np.eye(d))) > _FLAG_ATOL:
            raise DomainError("matrix flagged unitary is not unitary")

    @property
    def dim(self) -> int:
        return self.axis.size


def clock(axis: LatticeAxis) -> FactorOp:
    """Clock operator ``U = diag(ω^0, ..., ω^{d-1})`` with ``ω = exp(2πi/d)``."""
    d = axis.size
    omega = np.exp(2j * np.pi * np.arange(d) / d)
    return FactorOp(axis, np.diag(omega), unitary=True)


def shift(axis: LatticeAxis) -> FactorOp:
    """Cyclic shift ``V|j⟩ = |j+1 mod d⟩``.

    With this convention ``UV = ω VU``.
    """
    d = axis.size
    return FactorOp(axis, np.roll(np.eye(d), 1, axis=0), unitary=True)


def position_op(axis: LatticeAxis) -> FactorOp:
    return FactorOp(axis, np.diag(axis.positions).astype(complex), hermitian=True)


def dft_matrix(axis: LatticeAxis) -> np.ndarray:
    """Centered unitary DFT, ``F[n, j] = exp(-i κ_n x_j) / sqrt(d)``."""
    phase = np.outer(axis.momenta, axis.positions)
    return np.exp(-1j * phase) / np.sqrt(axis.size)


def plane_wave(axis: LatticeAxis, n: int) -> np.ndarray:
    """Normalized momentum eigenvector ``e_n`` with components ``exp(i κ_n x_j)/sqrt(d)``."""
    return np.exp(1j * axis.momenta[n] * axis.positions) / np.sqrt(axis.size)


def momentum_op(axis: LatticeAxis) -> FactorOp:
    """Spectral momentum ``P = F† diag(κ) F``."""
    F = dft_matrix(axis)
    P = F.conj().T @ (axis.momenta[:, None] * F)
    # symmetrize away rounding so the hermitian flag is exact
    P = 0.5 * (P + P.conj().T)
    return FactorOp(axis, P, hermitian=True)
