import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspacetime.axis import DomainError, make_axis, momentum_op
from qspacetime.constraint import ScalarField, kg_constraints
from qspacetime.oracle import kron_expand
from qspacetime.product import embed, make_space, random_state
from qspacetime.solve import composed_kernel, plane_wave_state, residual
from qspacetime.spinor import METRIC
from qspacetime.symmetry import (
    apply_gauge,
    boost,
    boost_labels,
    boosted_constraints_mixed,
    compose_velocities,
    conjugate_gauge,
    decouple_boosted,
    gauge_momentum_shift_residual,
    gauge_transform,
    recombine_residual,
)


def boost_space(d_t=16, d_x=8):
    # time grid spacing 0.4, x grid spacing 0.3
    return make_space([make_axis(d_t, 2 * np.pi / (0.4 * d_t), "time"), make_axis(d_x, 2 * np.pi / (0.3 * d_x), "x")])


# -- boosts ----------------------------------------------------------------------


def test_boost_matrix_example():
    p = boost(0.6)
    assert p.gamma == pytest.approx(1.25)
    L = p.Lambda
    assert L[0, 0] == pytest.approx(1.25) and L[0, 1] == pytest.approx(-0.75)
    assert np.allclose(np.diag(L)[2:], 1.0)


@given(st.floats(-0.99, 0.99), st.sampled_from(["x", "y", "z"]))
@settings(max_examples=50, deadline=None)
def test_boost_preserves_metric(v, axis):
    L = boost(v, axis).Lambda
    assert np.max(np.abs(L.T @ METRIC @ L - METRIC)) <= 1e-12
    assert np.linalg.det(L) == pytest.approx(1.0, abs=1e-12)


def test_boost_rejects():
    for v in (1.0, -1.0, 1.5, np.nan):
        with pytest.raises(DomainError):
            boost(v)
    with pytest.raises(DomainError):
        boost(0.3, "w")


def test_boost_zero_is_identity():
    assert np.array_equal(boost(0.0).Lambda, np.eye(4))


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
@settings(max_examples=50, deadline=None)
def test_boost_composition(v1, v2):
    L = boost(v1).Lambda @ boost(v2).Lambda
    assert np.allclose(L, boost(compose_velocities(v1, v2)).Lambda, atol=1e-12)


def test_boost_labels_example():
    E, k = boost_labels(0.5, [0.3, 0, 0], boost(0.6))
    assert E == pytest.approx(0.4, abs=1e-15)
    assert np.allclose(k, 0.0, atol=1e-15)


@given(st.floats(-2, 2), st.floats(0.01, 2), st.floats(-0.95, 0.95))
@settings(max_examples=50, deadline=None)
def test_boost_labels_keep_mass_shell(k, m, v):
    E = np.sqrt(k * k + m * m)
    Eb, kb = boost_labels(E, [k, 0, 0], boost(v))
    assert Eb * Eb - kb @ kb == pytest.approx(m * m, rel=1e-9, abs=1e-12)


def test_mixed_constraints_hermitian_and_commuting():
    sp = boost_space()
    C = boosted_constraints_mixed(sp, [0.3, 0, 0], 0.4, boost(0.6))
    assert C.max_commutator_residual() <= 1e-12
    for J in C.operators:
        M = kron_expand(J)
        assert np.max(np.abs(M - M.conj().T)) <= 1e-12


def test_decoupled_labels_and_recombination():
    sp = boost_space()
    p = boost(0.6)
    mixed = boosted_constraints_mixed(sp, [0.3, 0, 0], 0.4, p)
    dec = decouple_boosted(mixed, p)
    assert dec.params["E_exact"] == pytest.approx(0.4, abs=1e-14)
    assert dec.params["snap_error"] <= 1e-12
    assert dec.params["k_on_grid"]
    assert recombine_residual(mixed, dec, p) <= 1e-12


def test_recombination_dense():
    sp = boost_space(8, 4)
    p = boost(-0.35)
    mixed = boosted_constraints_mixed(sp, [sp.axis("x").momenta[3], 0, 0], 0.7, p)
    dec = decouple_boosted(mixed, p)
    g, v = p.gamma, p.v
    H, Px = kron_expand(dec.J_H), kron_expand(dec.J_P[0])
    assert np.max(np.abs(g * H - g * v * Px - kron_expand(mixed.J_H))) <= 1e-12
    assert np.max(np.abs(g * Px - g * v * H - kron_expand(mixed.J_P[0]))) <= 1e-12


def test_boosted_plane_wave_solves_decoupled():
    sp = boost_space()
    p = boost(0.6)
    dec = decouple_boosted(boosted_constraints_mixed(sp, [0.3, 0, 0], 0.4, p), p)
    v = plane_wave_state(sp, [0.0, 0, 0], dec.params["E_snap"])
    assert max(residual(dec, v)) <= 1e-10


def test_decouple_rejects_plain_set():
    sp = boost_space()
    with pytest.raises(DomainError):
        decouple_boosted(kg_constraints(sp, np.zeros(3), 1.0), boost(0.2))


def test_mixed_needs_boost_axis():
    sp = boost_space()
    with pytest.raises(DomainError):
        boosted_constraints_mixed(sp, [0.3, 0, 0], 0.4, boost(0.6, "y"))


# -- U(1) gauge ------------------------------------------------------------------


def gauge_space(d=32):
    return make_space([make_axis(16, 0.2, "time"), make_axis(d, 16.0 / d, "x")])


def test_linear_gauge_shift_exact():
    sp = gauge_space()
    q = 2 * sp.axis("x").momentum_spacing
    g = gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: q * x))
    assert np.allclose(g.gradients["x"], q, atol=1e-12)
    assert gauge_momentum_shift_residual(g, "x") <= 1e-10


def test_linear_gauge_moves_plane_wave():
    sp = gauge_space()
    x = sp.axis("x")
    q = 3 * x.momentum_spacing
    g = gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: q * x))
    v = plane_wave_state(sp, [x.momenta[10], 0, 0], 0.0)
    w = apply_gauge(g, v)
    target = plane_wave_state(sp, [x.momenta[13], 0, 0], 0.0)
    assert abs(abs(w.vdot(target)) - 1) <= 1e-12


def test_gauge_is_unitary():
    sp = gauge_space()
    g = gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: 0.3 * np.sin(2 * np.pi * x / 16)))
    v = random_state(sp, np.random.default_rng(0))
    assert apply_gauge(g, v).norm() == pytest.approx(1.0, abs=1e-12)


def test_gauge_rejects_nonperiodic():
    sp = gauge_space()
    with pytest.raises(DomainError):
        gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: 0.1 * x))


def test_time_gauge_shift():
    sp = gauge_space()
    q = sp.time_axis.momentum_spacing
    g = gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: q * t))
    assert gauge_momentum_shift_residual(g, "time") <= 1e-10


def test_conjugated_momentum_matches_dense():
    sp = make_space([make_axis(4, 0.2, "time"), make_axis(16, 0.5, "x")])
    g = gauge_transform(sp, ScalarField.from_function(sp, lambda t, x: 0.1 * np.sin(2 * np.pi * x / 8)))
    P = embed(momentum_op(sp.axis("x")), "x", sp)
    U = np.diag(g.phases.reshape(-1))
    dense = U.conj().T @ kron_expand(P) @ U
    assert np.max(np.abs(kron_expand(conjugate_gauge(g, P)) - dense)) <= 1e-12


@pytest.mark.parametrize("d", [32, 64, 128])
def test_smooth_gauge_shift_small(d):
    sp = gauge_space(d)
    lam = ScalarField.from_function(sp, lambda t, x: 0.1 * np.sin(2 * np.pi * x / 16))
    assert gauge_momentum_shift_residual(gauge_transform(sp, lam), "x") <= 1e-8


def test_boost_inverse():
    assert np.max(np.abs(boost(-0.6).Lambda @ boost(0.6).Lambda - np.eye(4))) <= 1e-12


def test_zero_boost_reduces_to_kg():
    sp = boost_space(8, 4)
    k = [sp.axis("x").momenta[3], 0, 0]
    p = boost(0.0)
    mixed = boosted_constraints_mixed(sp, k, 0.7, p)
    dec = decouple_boosted(mixed, p)
    plain = kg_constraints(sp, k, 0.7, snap=False)
    for A, B, C in zip(mixed.operators, dec.operators, plain.operators):
        assert np.max(np.abs(kron_expand(A) - kron_expand(C))) <= 1e-12
        assert np.max(np.abs(kron_expand(B) - kron_expand(C))) <= 1e-12


def test_boosted_plane_wave_off_grid_lattice():
    # E' and k' miss the grid here, so the residual is set by the snaps
    sp = boost_space(32, 16)
    p = boost(0.45)
    k = [sp.axis("x").momenta[10], 0, 0]
    mixed = boosted_constraints_mixed(sp, k, 0.9, p)
    Eb, kb = mixed.params["E_boosted"], mixed.params["k_boosted"]
    x = sp.axis("x")
    kb_snap = x.momenta[np.argmin(np.abs(x.momenta - kb[0]))]
    from qspacetime.solve import snap_frequency

    Eb_snap, e_err = snap_frequency(sp.time_axis, Eb)
    k_err = abs(kb_snap - kb[0])
    v = plane_wave_state(sp, [kb_snap, 0, 0], Eb_snap)
    g, vel = p.gamma, p.v
    r = residual(mixed, v)
    assert r[0] <= g * e_err + g * abs(vel) * k_err + 1e-10
    assert r[1] <= g * k_err + g * abs(vel) * e_err + 1e-10


def test_zero_and_constant_gauge():
    sp = gauge_space()
    g0 = gauge_transform(sp, ScalarField.constant(sp, 0.0))
    assert np.array_equal(g0.phases, np.ones(sp.grid_shape))
    gc = gauge_transform(sp, ScalarField.constant(sp, 0.7))
    v = random_state(sp, np.random.default_rng(1))
    assert np.allclose(apply_gauge(gc, v).amplitudes, np.exp(0.7j) * v.amplitudes, atol=1e-15)
    assert gauge_momentum_shift_residual(gc, "x") <= 1e-13


def test_gauge_phase_pointwise():
    sp = gauge_space()
    lam = ScalarField.from_function(sp, lambda t, x: 0.4 * np.cos(2 * np.pi * x / 16) * np.sin(2 * np.pi * t / 3.2))
    g = gauge_transform(sp, lam)
    v = random_state(sp, np.random.default_rng(2))
    w = apply_gauge(g, v)
    assert np.max(np.abs(w.tensor()[..., 0] - np.exp(1j * lam.values) * v.tensor()[..., 0])) <= 1e-12
