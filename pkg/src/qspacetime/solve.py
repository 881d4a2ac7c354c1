"""
Physical-state construction.

Two independent routes to constraint kernels are provided:

* exact composition, which tensors momentum eigenvectors (and a spinor)
  together, and
* :func:`approx_kernel`, a preconditioned LOBPCG iteration on ``Σ J†J``
  applied matrix-free.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from .axis import DomainError, LatticeAxis, dft_matrix, plane_wave
from .product import ProductSpace, StateVector, _apply_stage, apply, apply_columns

if TYPE_CHECKING:
    from .constraint import ConstraintSet

__all__ = [
    "ConvergenceError",
    "KernelResult",
    "SuperpositionSpec",
    "TwoParticleMode",
    "snap_frequency",
    "plane_wave_state",
    "residual",
    "composed_kernel",
    "approx_kernel",
    "history_state",
    "superpose",
    "gaussian_spec",
    "two_particle_modes",
    "two_particle_state",
]

DEFAULT_MAX_ITERS = 10_000
DEFAULT_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Iterative kernel search hit its iteration cap.

    ``best_residual`` holds the smallest constraint residual reached.
    """

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


def snap_frequency(axis: LatticeAxis, value: float) -> tuple[float, float]:
    """Nearest momentum-grid point to ``value`` and the distance to it.

    Exact midpoints go to the lower neighbour. Values more than half a grid
    step outside the grid raise :class:`DomainError`.
    """
    s = axis.momentum_spacing
    q = value / s
    lo = math.floor(q)
    n = lo if q - lo <= 0.5 else lo + 1
    half = axis.size // 2
    if not -half <= n < axis.size - half:
        raise DomainError(
            f"{value!r} lies outside the {axis.role} momentum grid "
            f"[{axis.momenta[0]:.6g}, {axis.momenta[-1]:.6g}]"
        )
    snapped = n * s
    return snapped, abs(value - snapped)


def plane_wave_state(space: ProductSpace, k, E_snap: float, branch: str = "+", spinor=None) -> StateVector:
    """``|p_t = ∓E⟩ ⊗ |k⟩ [⊗ u]`` as a unit vector.

    Coordinate amplitudes are ``exp(∓i E t + i k·x) / sqrt(N)`` (times the
    normalized spinor when ``spin_dim > 1``).
    """
    from .constraint import check_grid_momentum

    k = check_grid_momentum(space, k)
    if branch not in ("+", "-"):
        raise DomainError(f"branch must be '+' or '-', got {branch!r}")
    p_t = -E_snap if branch == "+" else E_snap
    t_axis = space.time_axis
    factors = [plane_wave(t_axis, t_axis.momentum_index(p_t))]
    for a in space.spatial_axes:
        factors.append(plane_wave(a, a.momentum_index(k["xyz".index(a.role)])))
    if space.spin_dim == 1:
        if spinor is not None and np.size(spinor) != 1:
            raise DomainError("a spinor was given for a spinless space")
        factors.append(np.ones(1, dtype=complex))
    else:
        if spinor is None:
            raise DomainError(f"spin_dim = {space.spin_dim} needs a spinor")
        u = np.asarray(spinor, dtype=complex)
        if u.shape != (space.spin_dim,):
            raise DomainError(f"spinor must have length {space.spin_dim}")
        factors.append(u / np.linalg.norm(u))
    amp = factors[0]
    for f in factors[1:]:
        amp = np.multiply.outer(amp, f)
    return StateVector(space, amp.reshape(-1))


def residual(C: "ConstraintSet", v: StateVector) -> list[float]:
    """``‖J v‖`` for each constraint, ``J_H`` first."""
    if v.space != C.space:
        raise DomainError("state and constraints live on different spaces")
    return [apply(J, v).norm() for J in C.operators]


@dataclass(frozen=True)
class KernelResult:
    states: list
    residuals: list
    method: str
    iterations: int = 0


def composed_kernel(C: "ConstraintSet") -> KernelResult:
    """Kernel vectors by exact composition of momentum eigenstates.

    Supported for ``kg``, ``kg2`` and ``dirac`` sets. For Dirac, one state per
    positive-energy spinor is returned.
    """
    from .spinor import spinor_eigensystem

    kind = C.params["kind"]
    E = C.params["E_snap"]
    if kind in ("kg", "kg2"):
        states = [plane_wave_state(C.space, C.params["k"], E, C.params["branch"])]
    elif kind == "dirac":
        pairs = spinor_eigensystem(C.params["k"], C.params["m"], C.params["rep"])
        states = [plane_wave_state(C.space, C.params["k"], E, "+", u) for lam, u in pairs if lam > 0]
    else:
        raise DomainError(f"no exact composition for constraint kind {kind!r}")
    res = [math.sqrt(sum(r * r for r in residual(C, s))) for s in states]
    order = np.argsort(res, kind="stable")
    return KernelResult([states[i] for i in order], [res[i] for i in order], "exact-composition")


# -- iterative kernel search -------------------------------------------------


def _time_blocks(C: "ConstraintSet"):
    """Per-``p_t`` blocks of each constraint, dropping time-dependent couplings.

    Returns an array ``B[c, n]`` of ``rest × rest`` matrices, or ``None`` if a
    term acts jointly on time and other slots.
    """
    space = C.space
    d_t = space.time_axis.size
    rest_shape = space.shape[1:]
    rest = int(np.prod(rest_shape))
    F = dft_matrix(space.time_axis)
    eye_rest = np.eye(rest, dtype=complex)
    blocks = np.zeros((len(C.operators), d_t, rest, rest), dtype=complex)
    for c, J in enumerate(C.operators):
        for coef, stages in J.terms:
            tdiag = np.ones(d_t, dtype=complex)
            R = eye_rest.reshape((rest,) + rest_shape)
            for st in reversed(stages):
                if isinstance(st, dict):
                    local = {}
                    for key, mat in st.items():
                        keys = key if isinstance(key, tuple) else (key,)
                        if 0 in keys:
                            if len(keys) > 1:
                                return None
                            tdiag = tdiag * np.einsum("nj,jk,nk->n", F, mat, F.conj())
                        else:
                            local[key] = mat
                    if local:
                        # R carries a leading column index in place of time
                        R = _apply_stage(local, R)
                else:
                    R = st.mean(axis=0)[None, ...] * R
            blocks[c] += coef * tdiag[:, None, None] * R.reshape(rest, rest).T[None, :, :]
    return blocks


def approx_kernel(
    C: "ConstraintSet",
    count: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = 0,
) -> KernelResult:
    """The ``count`` lowest eigenpairs of ``Σ J†J``.

    LOBPCG runs on the matrix-free operator. Its preconditioner and starting
    block come from the time-Fourier block decomposition of the constraints
    (exact when nothing depends on ``t``). Residuals are ``‖J v‖`` combined in
    quadrature and come back sorted ascending.

    Raises
    ------
    ConvergenceError
        If the eigen-residual does not reach ``tol`` (relative to the operator
        scale) within ``max_iters`` iterations.
    """
    space = C.space
    n = space.total_dim
    if count < 1:
        raise DomainError("count must be at least 1")
    if count > n:
        raise DomainError(f"count {count} exceeds total_dim {n}")
    ops = C.operators
    shape = space.shape

    def normal_op(X):
        X = np.asarray(X)
        single = X.ndim == 1
        X = X.reshape(n, -1)
        out = np.zeros_like(X, dtype=complex)
        for J in ops:
            JX = apply_columns(J, X)
            out += apply_columns(J.adjoint(), JX)
        return out[:, 0] if single else out

    A = LinearOperator((n, n), matvec=normal_op, matmat=normal_op, dtype=complex)

    d_t = space.time_axis.size
    rest = n // d_t
    F = dft_matrix(space.time_axis)
    blocks = _time_blocks(C)
    rng = np.random.default_rng(seed)
    extra = min(max(2, count // 2), n - count)
    m_block = count + extra

    if blocks is not None:
        K = np.einsum("cnab,cnad->nbd", blocks.conj(), blocks)
        K = 0.5 * (K + np.conj(np.swapaxes(K, 1, 2)))
        w, U = np.linalg.eigh(K)  # (d_t, rest), (d_t, rest, rest)
        flat = np.argsort(w.reshape(-1), kind="stable")[:m_block]
        X0 = np.zeros((n, m_block), dtype=complex)
        for col, idx in enumerate(flat):
            nt, r = divmod(int(idx), rest)
            # |p_t = κ_n⟩ ⊗ U[nt][:, r]
            X0[:, col] = np.kron(F[nt].conj(), U[nt][:, r])
        shift_ = max(1e-8, 1e-8 * float(np.max(w)))

        def precond(X):
            X = np.asarray(X).reshape(n, -1)
            Y = (F @ X.reshape(d_t, rest * X.shape[1])).reshape(d_t, rest, -1)
            Y = np.einsum("nab,nbk->nak", np.conj(np.swapaxes(U, 1, 2)), Y)
            Y = Y / (w[:, :, None] + shift_)
            Y = np.einsum("nab,nbk->nak", U, Y)
            return (F.conj().T @ Y.reshape(d_t, -1)).reshape(n, -1)

        M = LinearOperator((n, n), matvec=precond, matmat=precond, dtype=complex)
    else:
        X0 = rng.standard_normal((n, m_block)) + 1j * rng.standard_normal((n, m_block))
        M = None

    X0, _ = np.linalg.qr(X0)
    scale = sum(_op_scale(J) for J in ops) ** 2
    if n <= 5 * m_block:
        # too small for LOBPCG; Rayleigh-Ritz on the full space
        Ad = normal_op(np.eye(n, dtype=complex))
        vals, vecs = np.linalg.eigh(0.5 * (Ad + Ad.conj().T))
        iters = 0
    else:
        # non-convergence is reported below as ConvergenceError
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            vals, vecs, hist = lobpcg(
                A, X0, M=M, largest=False, tol=tol * scale, maxiter=max_iters, retResidualNormsHistory=True
            )
        iters = len(hist)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    vecs = vecs[:, :count]
    vals = vals[:count]
    eig_res = np.linalg.norm(normal_op(vecs) - vecs * vals[None, :], axis=0)
    states, res = [], []
    for j in range(count):
        v = StateVector(space, vecs[:, j]).normalize()
        states.append(v)
        res.append(math.sqrt(sum(r * r for r in residual(C, v))))
    worst = float(np.max(eig_res)) if count else 0.0
    if worst > max(tol * scale, 1e-10 * scale):
        raise ConvergenceError(
            f"kernel search did not converge in {max_iters} iterations "
            f"(eigen-residual {worst:.3g})",
            best_residual=min(res),
        )
    order = np.argsort(res, kind="stable")
    return KernelResult([states[i] for i in order], [res[i] for i in order], "eigensolve", iters)


def _op_scale(J) -> float:
    # cheap upper bound on ‖J‖ from the factor norms
    total = 0.0
    for coef, stages in J.terms:
        t = abs(coef)
        for st in stages:
            if isinstance(st, dict):
                for m in st.values():
                    t *= np.linalg.norm(m, 2)
            else:
                t *= np.max(np.abs(st))
        total += t
    return max(total, 1.0)


def history_state(kernel: KernelResult, initial, t_index: int = 0) -> StateVector:
    """Project ``|t_index⟩ ⊗ initial`` onto the span of the kernel states."""
    space = kernel.states[0].space
    d_t = space.time_axis.size
    rest = space.total_dim // d_t
    psi0 = np.asarray(initial, dtype=complex).reshape(-1)
    if psi0.size != rest:
        raise DomainError(f"initial state must have {rest} amplitudes")
    seed = np.zeros(space.total_dim, dtype=complex)
    seed[t_index * rest : (t_index + 1) * rest] = psi0
    Q = np.column_stack([s.amplitudes for s in kernel.states])
    Q, _ = np.linalg.qr(Q)
    return StateVector(space, Q @ (Q.conj().T @ seed)).normalize()


# -- superpositions ------------------------------------------------------------


@dataclass(frozen=True)
class SuperpositionSpec:
    """Grid modes ``k`` with complex weights ``c(k)`` on one energy branch."""

    modes: tuple
    branch: str = "+"

    def __post_init__(self):
        ks = [tuple(np.asarray(k, dtype=float).tolist()) for k, _ in self.modes]
        if len(set(ks)) != len(ks):
            raise DomainError("superposition modes must be distinct")


def gaussian_spec(axis: LatticeAxis, center_index: int, width: float, n_modes: int, branch: str = "+") -> SuperpositionSpec:
    """Gaussian weights over ``n_modes`` consecutive grid momenta along one axis.

    ``width`` is in units of grid steps.
    """
    half = n_modes // 2
    modes = []
    for j in range(center_index - half, center_index - half + n_modes):
        k = np.zeros(3)
        k["xyz".index(axis.role)] = axis.momenta[j]
        modes.append((k, np.exp(-((j - center_index) ** 2) / (4 * width**2))))
    return SuperpositionSpec(tuple(modes), branch)


def superpose(spec: SuperpositionSpec, space: ProductSpace, m: float) -> StateVector:
    """``Σ c(k) |ψ_k⟩`` with each energy snapped to the time grid, normalized."""
    from .constraint import dispersion

    amps = np.zeros(space.total_dim, dtype=complex)
    # fixed summation order keeps the result independent of scheduling
    for k, c in spec.modes:
        E_snap, _ = snap_frequency(space.time_axis, dispersion(k, m))
        amps += c * plane_wave_state(space, k, E_snap, spec.branch).amplitudes
    return StateVector(space, amps).normalize()


# -- two particles -----------------------------------------------------------


@dataclass(frozen=True)
class TwoParticleMode:
    k1: tuple
    k2: tuple
    E1: float
    E2: float

    @property
    def E_sum(self) -> float:
        return self.E1 + self.E2


def two_particle_modes(axes: Sequence[LatticeAxis], m: float, E_tot: float, k_tot, tol: float = 0.0) -> list:
    """All grid pairs ``(k1, k2)`` with ``k1 + k2 ≡ k_tot`` and ``|E1 + E2 − E_tot| ≤ tol``.

    ``k_tot`` must lie on the grid. Returns :class:`TwoParticleMode` records in
    lexicographic order of ``k1``'s grid indices.
    """
    from .constraint import dispersion

    if tol < 0:
        raise DomainError("tol must be non-negative")
    k_tot = np.asarray(k_tot, dtype=float).reshape(-1)
    if np.any(k_tot[len(axes):] != 0):
        raise DomainError("k_tot has components along axes that are not present")
    k_tot = np.concatenate([k_tot[: len(axes)], np.zeros(max(0, len(axes) - k_tot.size))])
    tot_idx = [a.momentum_index(k_tot[j]) - a.size // 2 for j, a in enumerate(axes)]
    modes = []
    for idx in itertools.product(*[range(a.size) for a in axes]):
        k1, k2 = [], []
        for j, a in enumerate(axes):
            n1 = idx[j] - a.size // 2
            n2 = (tot_idx[j] - n1 + a.size // 2) % a.size - a.size // 2
            k1.append(n1 * a.momentum_spacing)
            k2.append(n2 * a.momentum_spacing)
        E1, E2 = dispersion(k1, m), dispersion(k2, m)
        if abs(E1 + E2 - E_tot) <= tol:
            modes.append(TwoParticleMode(tuple(k1), tuple(k2), E1, E2))
    return modes


def two_particle_state(space: ProductSpace, modes, m: float, coeffs=None) -> StateVector:
    """``Σ c ψ_{k1}(t, x) ψ_{k2}(t, x)`` on the shared lattice, normalized.

    Each single-particle wavefunction uses its own snapped energy, so a product
    term oscillates at ``E1_snap + E2_snap``.
    """
    from .constraint import dispersion

    if coeffs is None:
        coeffs = [1.0] * len(modes)
    amps = np.zeros(space.total_dim, dtype=complex)
    for mode, c in zip(modes, coeffs):
        E1, _ = snap_frequency(space.time_axis, dispersion(mode.k1, m))
        E2, _ = snap_frequency(space.time_axis, dispersion(mode.k2, m))
        psi1 = plane_wave_state(space, mode.k1, E1).amplitudes
        psi2 = plane_wave_state(space, mode.k2, E2).amplitudes
        amps += c * psi1 * psi2
    return StateVector(space, amps).normalize()
