from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspacetime.axis import (
    DomainError,
    FactorOp,
    clock,
    dft_matrix,
    make_axis,
    momentum_op,
    plane_wave,
    position_op,
    shift,
)


def test_make_axis_positions_centered():
    a = make_axis(4, 1.0, "x")
    assert np.array_equal(a.positions, [-2.0, -1.0, 0.0, 1.0])


def test_make_axis_smallest_case():
    a = make_axis(2, 0.5, "time")
    assert np.allclose(a.positions, [-0.5, 0.0])
    assert np.allclose(a.momenta, [-2 * np.pi, 0.0])


def test_momentum_spacing_d64():
    # 2π/6.4 from the decimal expansion of π
    expected = float(2 * Fraction("3.14159265358979323846264338327950288") / Fraction("6.4"))
    a = make_axis(64, 0.1, "time")
    assert a.momentum_spacing == pytest.approx(expected, rel=1e-15)
    assert a.momentum_spacing == pytest.approx(0.9817, abs=1e-4)


@pytest.mark.parametrize("d, spacing", [(1, 1.0), (0, 1.0), (4, 0.0), (4, -1.0), (4, float("nan"))])
def test_make_axis_rejects(d, spacing):
    with pytest.raises(DomainError):
        make_axis(d, spacing, "x")


def test_make_axis_rejects_role():
    with pytest.raises(DomainError):
        make_axis(4, 1.0, "w")


@given(st.integers(2, 40), st.floats(0.01, 10.0))
@settings(max_examples=40, deadline=None)
def test_grid_invariants(d, spacing):
    a = make_axis(d, spacing, "x")
    assert np.all(np.diff(a.positions) > 0)
    assert np.all(np.diff(a.momenta) > 0)
    assert a.extent == pytest.approx(d * spacing)
    assert np.allclose(np.diff(a.momenta), 2 * np.pi / (d * spacing))
    assert a.positions[d // 2] == 0 and a.momenta[d // 2] == 0


def test_momentum_index_rejects_off_grid():
    a = make_axis(8, 1.0, "x")
    assert a.momentum_index(a.momenta[5]) == 5
    with pytest.raises(DomainError):
        a.momentum_index(0.5 * a.momentum_spacing)
    with pytest.raises(DomainError):
        a.momentum_index(4 * a.momentum_spacing)  # one past the top of the grid


def test_clock_shift_d2_pauli():
    a = make_axis(2, 1.0, "x")
    U, V = clock(a).matrix, shift(a).matrix
    assert np.allclose(U, np.diag([1, -1]))
    assert np.allclose(V, [[0, 1], [1, 0]])
    assert np.allclose(U @ V, -V @ U)


def test_clock_shift_d4_entrywise():
    a = make_axis(4, 1.0, "x")
    U, V = clock(a).matrix, shift(a).matrix
    assert np.max(np.abs(U @ V - 1j * V @ U)) <= 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 8, 64])
def test_weyl_relation(d):
    a = make_axis(d, 1.0, "x")
    U, V = clock(a).matrix, shift(a).matrix
    omega = np.exp(2j * np.pi / d)
    assert np.max(np.abs(U @ V - omega * V @ U)) <= 1e-12


def test_shift_permutes_sites():
    a = make_axis(5, 1.0, "x")
    V = shift(a).matrix
    for j in range(5):
        e = np.zeros(5)
        e[j] = 1
        assert np.array_equal(V @ e, np.roll(e, 1))


def test_position_op():
    a = make_axis(4, 1.0, "x")
    X = position_op(a)
    assert np.allclose(X.matrix, np.diag([-2, -1, 0, 1]))
    assert np.allclose(np.sort(np.linalg.eigvalsh(X.matrix)), a.positions)
    assert np.trace(X.matrix).real == pytest.approx(sum(a.positions))


def test_position_trace_oracle():
    for d in (4, 7, 10):
        a = make_axis(d, 0.3, "x")
        direct = sum((j - d // 2) * 0.3 for j in range(d))
        assert np.trace(position_op(a).matrix).real == pytest.approx(direct, abs=1e-12)


def test_momentum_op_d2_eigenvalues():
    a = make_axis(2, 1.0, "x")
    assert np.allclose(np.sort(np.linalg.eigvalsh(momentum_op(a).matrix)), [-np.pi, 0.0])


def test_momentum_eigenvectors_d64():
    a = make_axis(64, 0.1, "x")
    P = momentum_op(a).matrix
    for n in range(64):
        e = plane_wave(a, n)
        assert np.linalg.norm(P @ e - a.momenta[n] * e) <= 1e-12


def test_momentum_hermitian_d128():
    P = momentum_op(make_axis(128, 0.05, "time")).matrix
    assert np.max(np.abs(P - P.conj().T)) <= 1e-12


def test_dft_unitary():
    F = dft_matrix(make_axis(33, 0.2, "x"))
    assert np.max(np.abs(F.conj().T @ F - np.eye(33))) <= 1e-12


def test_factor_flags_verified():
    a = make_axis(3, 1.0, "x")
    with pytest.raises(DomainError):
        FactorOp(a, np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), hermitian=True)
    with pytest.raises(DomainError):
        FactorOp(a, 2 * np.eye(3), unitary=True)
    with pytest.raises(DomainError):
        FactorOp(a, np.eye(2))


def _ccr_expectation_error(d, extent=16.0):
    a = make_axis(d, extent / d, "x")
    g = np.exp(-(a.positions**2) / (2 * (extent / 8) ** 2)).astype(complex)
    g /= np.linalg.norm(g)
    X, P = position_op(a).matrix, momentum_op(a).matrix
    comm = X @ P - P @ X
    return abs(np.vdot(g, comm @ g) - 1j), np.linalg.norm(comm @ g - 1j * g)


def test_ccr_recovered_in_expectation():
    e64, _ = _ccr_expectation_error(64)
    e128, _ = _ccr_expectation_error(128)
    assert e64 <= 0.01
    assert e128 < e64


def test_ccr_vector_error_stays_small():
    # x·g jumps at the ring seam, so the vector error is bounded but does not
    # shrink with d at σ = L/8; only the expectation value converges
    errs = [_ccr_expectation_error(d)[1] for d in (32, 64, 128)]
    assert max(errs) <= 0.02


def test_ccr_trace_obstruction():
    # tr[X, P] = 0 in finite dimension, so [X, P] = i·I is impossible
    a = make_axis(16, 0.5, "x")
    comm = position_op(a).matrix @ momentum_op(a).matrix - momentum_op(a).matrix @ position_op(a).matrix
    assert abs(np.trace(comm)) <= 1e-10
    assert np.linalg.norm(comm - 1j * np.eye(16)) > 1
