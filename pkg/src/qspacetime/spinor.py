"""
Gamma matrices, the α/β operators and the spinor Hamiltonian ``Σ k_j α_j + m β``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .axis import DomainError

__all__ = [
    "METRIC",
    "SpinorRep",
    "gamma_set",
    "alpha_beta",
    "spin_operators",
    "clifford_violation",
    "spinor_hamiltonian",
    "spinor_eigensystem",
]

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


def _dirac_gammas():
    g0 = _block(_I2, _Z2, _Z2, -_I2)
    gs = [_block(_Z2, s, -s, _Z2) for s in (_SX, _SY, _SZ)]
    return [g0] + gs


def _majorana_gammas():
    # purely imaginary representation
    g0 = _block(_Z2, _SY, _SY, _Z2)
    g1 = _block(1j * _SZ, _Z2, _Z2, 1j * _SZ)
    g2 = _block(_Z2, -_SY, _SY, _Z2)
    g3 = _block(-1j * _SX, _Z2, _Z2, -1j * _SX)
    return [g0, g1, g2, g3]


_REPS = {"dirac": _dirac_gammas, "majorana": _majorana_gammas}


def clifford_violation(gammas) -> float:
    """Largest entrywise deviation of ``{γ^μ, γ^ν}`` from ``2η^{μν} I``."""
    worst = 0.0
    eye = np.eye(gammas[0].shape[0])
    for mu in range(4):
        for nu in range(mu, 4):
            anti = gammas[mu] @ gammas[nu] + gammas[nu] @ gammas[mu]
            worst = max(worst, np.max(np.abs(anti - 2 * METRIC[mu, nu] * eye)))
    return float(worst)


@dataclass(frozen=True, eq=False)
class SpinorRep:
    name: str
    gammas: tuple

    def __post_init__(self):
        err = clifford_violation(self.gammas)
        if err > 1e-12:
            raise DomainError(f"{self.name} gammas violate the Clifford algebra by {err:.3g}")


def gamma_set(name: str = "dirac") -> SpinorRep:
    """Verified set of gamma matrices, metric signature (+, −, −, −).

    Supported representations are ``"dirac"`` (standard) and ``"majorana"``.
    """
    try:
        build = _REPS[name]
    except KeyError:
        raise DomainError(f"unknown gamma representation {name!r}; choose from {sorted(_REPS)}") from None
    gammas = tuple(g.copy() for g in build())
    for g in gammas:
        g.setflags(write=False)
    return SpinorRep(name, gammas)


def alpha_beta(rep: SpinorRep):
    """``(α_x, α_y, α_z, β)`` with ``β = γ^0`` and ``α_j = γ^0 γ^j``."""
    g0 = rep.gammas[0]
    alphas = [g0 @ g for g in rep.gammas[1:]]
    return alphas[0], alphas[1], alphas[2], g0.copy()


def spin_operators(rep: SpinorRep):
    """Spin matrices ``Σ_x = iγ²γ³``, ``Σ_y = iγ³γ¹``, ``Σ_z = iγ¹γ²``."""
    _, g1, g2, g3 = rep.gammas
    return 1j * g2 @ g3, 1j * g3 @ g1, 1j * g1 @ g2


def spinor_hamiltonian(k, m: float, rep: SpinorRep) -> np.ndarray:
    ax, ay, az, beta = alpha_beta(rep)
    k = np.asarray(k, dtype=float)
    if k.shape != (3,) or not np.all(np.isfinite(k)) or not np.isfinite(m):
        raise DomainError("spinor_hamiltonian needs a finite 3-vector k and finite m")
    return k[0] * ax + k[1] * ay + k[2] * az + m * beta


def _fix_phase(u: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(u) > 1e-10))
    return u * (abs(u[j]) / u[j])


def spinor_eigensystem(k, m: float, rep: SpinorRep):
    """Orthonormal eigenpairs of ``Σ k_j α_j + m β``, sorted by eigenvalue.

    Degenerate pairs are split by helicity ``Σ·k̂`` (``Σ_z`` when ``k = 0``),
    then by ``β`` if still degenerate; each spinor's first non-negligible
    component is made real and positive.

    Returns
    -------
    list of (float, ndarray)
        Four ``(eigenvalue, spinor)`` pairs; eigenvalues ``−E, −E, +E, +E``.
    """
    H = spinor_hamiltonian(k, m, rep)
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    sx, sy, sz = spin_operators(rep)
    helicity = sz if kn == 0 else (k[0] * sx + k[1] * sy + k[2] * sz) / kn
    beta = rep.gammas[0]

    vals, vecs = np.linalg.eigh(H)
    E = np.sqrt(kn**2 + m**2)
    pairs = []
    # cluster eigenvalues; within each cluster diagonalize the tie-breakers
    scale = max(E, 1.0)
    i = 0
    while i < 4:
        j = i + 1
        while j < 4 and abs(vals[j] - vals[i]) <= 1e-9 * scale:
            j += 1
        block = vecs[:, i:j]
        for tie in (helicity, beta):
            if block.shape[1] == 1:
                break
            hv, hw = np.linalg.eigh(block.conj().T @ tie @ block)
            block = block @ hw
            if np.all(np.diff(hv) > 1e-9):
                break
        for c in range(block.shape[1]):
            u = _fix_phase(block[:, c])
            lam = float(np.real(np.vdot(u, H @ u)))
            pairs.append((lam, u))
        i = j
    return pairs
