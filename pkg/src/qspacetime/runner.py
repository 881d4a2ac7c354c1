"""
Scenario runner.

A scenario is described by an INI file::

    [scenario]
    name = kg-plane-wave
    seed = 0

    [lattice]
    d_t = 64
    dt = 0.1
    d_x = 64
    dx = 0.5

    [physics]
    m = 1.0
    k_steps = 1

Every key is validated against the scenario schema before anything is
computed; unknown keys or sections are rejected. Outputs are
``wavefunction.csv`` and ``report.json`` in the output directory, written
only after the whole run succeeds.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .axis import DomainError, make_axis, momentum_op, position_op
from .constraint import (
    ScalarField,
    dirac_constraints,
    dirac_covariant_op,
    dispersion,
    kg_constraints,
    nr_constraint,
    pw_constraint,
    two_particle_constraints,
)
from .product import DEFAULT_DENSE_BUDGET, BudgetError, ProductSpace, StateVector, apply, dense, make_space
from .slices import (
    group_velocity,
    slice_evolution_check,
    spatial_translation_residual,
    temporal_translation_residual,
)
from .solve import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    ConvergenceError,
    approx_kernel,
    composed_kernel,
    gaussian_spec,
    history_state,
    plane_wave_state,
    residual,
    snap_frequency,
    superpose,
    two_particle_modes,
    two_particle_state,
)
from .spinor import gamma_set
from .symmetry import (
    apply_gauge,
    boost,
    boost_labels,
    boosted_constraints_mixed,
    conjugate_gauge,
    decouple_boosted,
    gauge_momentum_shift_residual,
    gauge_transform,
    recombine_residual,
)

__all__ = ["ConfigError", "ScenarioConfig", "SCENARIOS", "load_config", "run_scenario", "list_scenarios", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Invalid scenario configuration."""


# -- schema ------------------------------------------------------------------


def _int(s: str) -> int:
    return int(s)


def _float(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _intlist(s: str) -> tuple:
    return tuple(int(p) for p in s.replace(",", " ").split())


def _choice(*options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {options}")
        return s

    return parse


def _lattice(time_default, space_default=None, dims=3):
    keys = {"d_t": (_int, time_default[0]), "dt": (_float, time_default[1])}
    if space_default is not None:
        keys["d_x"] = (_int, space_default[0])
        keys["dx"] = (_float, space_default[1])
        for name in ("y", "z")[: dims - 1]:
            keys[f"d_{name}"] = (_int, None)
            keys[f"d{name}"] = (_float, None)
    return keys


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    lattice: dict
    physics: dict
    run: Callable = field(repr=False, compare=False)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    lattice: dict
    physics: dict


@dataclass
class Options:
    dense_budget: int = DEFAULT_DENSE_BUDGET
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL


@dataclass
class Outcome:
    params: dict
    snap_errors: dict
    residuals: dict
    fidelities: dict
    state: StateVector | None = None


# -- helpers -----------------------------------------------------------------


def _space(lat: dict, spin_dim: int = 1) -> ProductSpace:
    axes = [make_axis(lat["d_t"], lat["dt"], "time")]
    for name in ("x", "y", "z"):
        d = lat.get(f"d_{name}")
        if d is not None:
            axes.append(make_axis(d, lat[f"d{name}"], name))
    return make_space(axes, spin_dim)


def _k_from_steps(space: ProductSpace, steps: tuple) -> np.ndarray:
    spatial = space.spatial_axes
    if len(steps) > len(spatial):
        raise DomainError(f"k_steps has {len(steps)} entries but the space has {len(spatial)} spatial axes")
    k = np.zeros(3)
    for a, n in zip(spatial, steps):
        k["xyz".index(a.role)] = n * a.momentum_spacing
        a.momentum_index(k["xyz".index(a.role)])
    return k


def _quad(vals) -> float:
    return float(math.sqrt(sum(v * v for v in vals)))


def _named(C, vals) -> dict:
    names = ["J_H"] + [f"J_P{a.role}" for a in C.space.spatial_axes][: len(vals) - 1]
    return {n: float(v) for n, v in zip(names, vals)}


def _dense_check(C, results, opts: Options) -> dict:
    # optional cross-check of the iterative kernel against a dense SVD
    if C.space.total_dim > opts.dense_budget:
        return {}
    try:
        A = np.vstack([dense(J, opts.dense_budget) for J in C.operators])
    except BudgetError:
        return {}
    s = np.sort(np.linalg.svd(A, compute_uv=False))[: len(results)]
    return {"dense_svd_max_deviation": float(np.max(np.abs(s - np.asarray(results))))}


# -- scenarios -----------------------------------------------------------------


def _run_pw_qubit(cfg: ScenarioConfig, opts: Options) -> Outcome:
    lat, ph = cfg.lattice, cfg.physics
    t_axis = make_axis(lat["d_t"], lat["dt"], "time")
    space = make_space([t_axis, make_axis(2, 1.0, "x")])
    gap = ph["gap"] if ph["gap"] is not None else ph["gap_steps"] * t_axis.momentum_spacing
    H = np.diag([0.0, gap]).astype(complex)
    C = pw_constraint(space, H)
    K = approx_kernel(C, 2, opts.tol, opts.max_iters, cfg.seed)
    t_ref = lat["d_t"] // 2
    psi0 = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
    v = history_state(K, psi0, t_ref)
    chk = slice_evolution_check(v, H, t_ref)
    _, err = snap_frequency(t_axis, -gap)
    res = {"kernel": [float(r) for r in K.residuals], "history_state": _named(C, residual(C, v))}
    res.update(_dense_check(C, K.residuals, opts))
    return Outcome(
        {"gap": gap, "t_ref": t_ref},
        {"gap": err},
        res,
        {"min": chk.min_fidelity, "per_slice": chk.fidelities.tolist(), "norms_vary": chk.norms_vary},
        v,
    )


def _run_kg_plane_wave(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    k = _k_from_steps(space, ph["k_steps"])
    C = kg_constraints(space, k, ph["m"], ph["branch"])
    v = composed_kernel(C).states[0]
    C_exact = kg_constraints(space, k, ph["m"], ph["branch"], snap=False)
    sign = 1 if ph["branch"] == "+" else -1
    E = C.params["E_snap"]
    return Outcome(
        {"m": ph["m"], "k": k.tolist(), "branch": ph["branch"], "E_exact": C.params["E_exact"], "E_snap": E},
        {"E": C.params["snap_error"]},
        {
            "snapped": _named(C, residual(C, v)),
            "exact_E": _named(C_exact, residual(C_exact, v)),
            "temporal": temporal_translation_residual(v, sign * E),
            "spatial": spatial_translation_residual(v, k),
        },
        {},
        v,
    )


def _run_kg_wavepacket(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    x = space.axis("x")
    center = x.size // 2 + ph["center_steps"]
    spec = gaussian_spec(x, center, ph["width_steps"], ph["n_modes"])
    v = superpose(spec, space, ph["m"])
    k0 = x.momenta[center]
    vg = k0 / dispersion([k0], ph["m"])
    d_t = lat["d_t"]
    h = min(ph["window"], d_t // 2 - 1)
    window = np.arange(d_t // 2 - h, d_t // 2 + h + 1)
    measured = group_velocity(v, window)
    snaps = {}
    for kk, _ in spec.modes:
        snaps[f"k={kk[0]:.17g}"] = snap_frequency(space.time_axis, dispersion(kk, ph["m"]))[1]
    return Outcome(
        {"m": ph["m"], "k_center": k0, "n_modes": ph["n_modes"], "width_steps": ph["width_steps"]},
        snaps,
        {"group_velocity_measured": measured, "group_velocity_analytic": vg, "group_velocity_error": abs(measured - vg)},
        {},
        v,
    )


def _run_kg_two_particle(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    m = ph["m"]
    k1 = _k_from_steps(space, ph["k1_steps"])
    k2 = _k_from_steps(space, ph["k2_steps"])
    E1, e1 = snap_frequency(space.time_axis, dispersion(k1, m))
    E2, e2 = snap_frequency(space.time_axis, dispersion(k2, m))
    C = two_particle_constraints(space, E1 + E2, k1 + k2)
    modes = two_particle_modes(space.spatial_axes, m, dispersion(k1, m) + dispersion(k2, m), k1 + k2, ph["tol"])
    chosen = [md for md in modes if np.allclose(md.k1, k1[: len(md.k1)]) and np.allclose(md.k2, k2[: len(md.k2)])]
    v = two_particle_state(space, chosen, m)
    return Outcome(
        {"m": m, "k1": k1.tolist(), "k2": k2.tolist(), "E_tot": E1 + E2, "n_modes": len(modes)},
        {"E1": e1, "E2": e2, "E_tot": C.params["snap_error"]},
        {"product_state": _named(C, residual(C, v))},
        {},
        v,
    )


def _run_nr_potential(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    if len(space.spatial_axes) != 1:
        raise DomainError("nr-potential uses one spatial axis")
    m, w = ph["m"], ph["omega"]
    x = space.axis("x")
    V = ScalarField.from_function(space, lambda t, xx: 0.5 * m * w * w * xx * xx)
    C = nr_constraint(space, m, V)
    p = momentum_op(x).matrix
    H = p @ p / (2 * m) + np.diag(0.5 * m * w * w * x.positions**2)
    K = approx_kernel(C, x.size, opts.tol, opts.max_iters, cfg.seed)
    psi0 = np.exp(-m * w * (x.positions - ph["x0"]) ** 2 / 2).astype(complex)
    psi0 /= np.linalg.norm(psi0)
    t_ref = lat["d_t"] // 2
    v = history_state(K, psi0, t_ref)
    h = min(ph["window"], lat["d_t"] // 2)
    chk = slice_evolution_check(v, H, t_ref, np.arange(t_ref - h, t_ref + h))
    levels = np.linalg.eigvalsh(H)
    snaps = {f"level_{i}": snap_frequency(space.time_axis, -E)[1] for i, E in enumerate(levels[:8])}
    return Outcome(
        {"m": m, "omega": w, "x0": ph["x0"], "window": h, "max_level": float(levels[-1])},
        snaps,
        {"kernel": [float(r) for r in K.residuals], "history_state": _named(C, residual(C, v))},
        {"min": chk.min_fidelity, "per_slice": chk.fidelities.tolist(), "norms_vary": chk.norms_vary},
        v,
    )


def _run_dirac_plane_wave(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat, spin_dim=4)
    rep = gamma_set(ph["rep"])
    k = _k_from_steps(space, ph["k_steps"])
    C = dirac_constraints(space, k, ph["m"], rep)
    K = composed_kernel(C)
    cov = dirac_covariant_op(space, ph["m"], rep)
    return Outcome(
        {"m": ph["m"], "k": k.tolist(), "rep": ph["rep"], "E_exact": C.params["E_exact"], "E_snap": C.params["E_snap"]},
        {"E": C.params["snap_error"]},
        {
            "constraints": [_named(C, residual(C, s)) for s in K.states],
            "covariant": [apply(cov, s).norm() for s in K.states],
            "max_commutator": C.max_commutator_residual(),
        },
        {},
        K.states[0],
    )


def _run_lorentz_boost(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    b = boost(ph["v"], "x")
    k = _k_from_steps(space, ph["k_steps"])
    m = ph["m"]
    E = dispersion(k, m)
    Eb, kb = boost_labels(E, k, b)
    mixed = boosted_constraints_mixed(space, k, m, b)
    dec = decouple_boosted(mixed, b)
    g, v = b.gamma, b.v
    eig_H = g * (-Eb) - g * v * kb[0] + E
    eig_P = g * kb[0] - g * v * (-Eb) - k[0]
    out = Outcome(
        {"m": m, "v": v, "gamma": g, "k": k.tolist(), "E": E, "E_boosted": Eb, "k_boosted": kb.tolist()},
        {"E_boosted": dec.params["snap_error"]},
        {
            "mass_shell": abs(Eb * Eb - float(kb @ kb) - m * m),
            "eigen_J_H": abs(eig_H),
            "eigen_J_Px": abs(eig_P),
            "recombination": recombine_residual(mixed, dec, b, seed=cfg.seed),
        },
        {},
    )
    if dec.params["k_on_grid"]:
        E_snap = dec.params["E_snap"]
        state = plane_wave_state(space, kb, E_snap)
        out.residuals["boosted_plane_wave"] = _named(mixed, residual(mixed, state))
        out.state = state
    return out


def _run_gauge_u1(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    space = _space(lat)
    x = space.axis("x")
    if ph["lambda"] == "linear":
        a = ph["steps"] * x.momentum_spacing
        func = lambda t, xx, *rest: a * xx  # noqa: E731
    else:
        amp, L = ph["amplitude"], x.extent
        func = lambda t, xx, *rest: amp * np.sin(2 * np.pi * xx / L)  # noqa: E731
    lam = ScalarField.from_function(space, func, "gauge")
    g = gauge_transform(space, lam)
    k = _k_from_steps(space, ph["k_steps"])
    C = kg_constraints(space, k, ph["m"])
    v = composed_kernel(C).states[0]
    rng = np.random.default_rng(cfg.seed)
    w = StateVector(space, rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)).normalize()
    vp, wp = apply_gauge(g, v), apply_gauge(g, w)
    inv = 0.0
    for J in C.operators:
        Jp = conjugate_gauge(g, J)
        inv = max(inv, abs(apply(Jp, vp).norm() - apply(J, v).norm()), abs(apply(Jp, wp).norm() - apply(J, w).norm()))
    shifts = {a.role: gauge_momentum_shift_residual(g, a.role, seed=cfg.seed) for a in space.axes}
    return Outcome(
        {"lambda": ph["lambda"], "m": ph["m"], "k": k.tolist()},
        {"E": C.params["snap_error"]},
        {"invariance": inv, "momentum_shift": shifts},
        {},
        vp,
    )


def _run_convergence_study(cfg, opts):
    lat, ph = cfg.lattice, cfg.physics
    gap = ph["gap"]
    fids, snaps, ccr = {}, {}, {}
    h = ph["window"]
    for d in ph["sizes"]:
        t_axis = make_axis(d, lat["dt"], "time")
        space = make_space([t_axis, make_axis(2, 1.0, "x")])
        H = np.diag([0.0, gap]).astype(complex)
        K = approx_kernel(pw_constraint(space, H), 2, opts.tol, opts.max_iters, cfg.seed)
        v = history_state(K, np.array([1.0, 1.0], dtype=complex) / math.sqrt(2), d // 2)
        w = np.arange(d // 2 - min(h, d // 2), d // 2 + min(h, d // 2))
        fids[str(d)] = slice_evolution_check(v, H, d // 2, w).min_fidelity
        snaps[str(d)] = snap_frequency(t_axis, -gap)[1]
        ccr[str(d)] = _ccr_error(d, ph["ccr_extent"])
    return Outcome(
        {"gap": gap, "sizes": list(ph["sizes"]), "window": h, "ccr_extent": ph["ccr_extent"]},
        snaps,
        {"ccr_expectation_error": ccr},
        {"min_by_size": fids},
        None,
    )


def _ccr_error(d: int, extent: float) -> float:
    a = make_axis(d, extent / d, "x")
    g = np.exp(-(a.positions**2) / (2 * (extent / 8) ** 2)).astype(complex)
    g /= np.linalg.norm(g)
    X, P = position_op(a).matrix, momentum_op(a).matrix
    return float(abs(np.vdot(g, (X @ P - P @ X) @ g) - 1j))


_T = (64, 0.1)
SCENARIOS = {
    s.name: s
    for s in [
        Scenario(
            "pw-qubit",
            "Page-Wootters qubit history state checked slice by slice against exact evolution",
            _lattice((64, 0.1)),
            {"gap": (_float, None), "gap_steps": (_int, 2)},
            _run_pw_qubit,
        ),
        Scenario(
            "kg-plane-wave",
            "Klein-Gordon plane wave: snap error, constraint and translation residuals",
            _lattice(_T, (64, 0.5)),
            {"m": (_float, 1.0), "k_steps": (_intlist, (1,)), "branch": (_choice("+", "-"), "+")},
            _run_kg_plane_wave,
        ),
        Scenario(
            "kg-wavepacket",
            "Gaussian superposition of plane waves; packet velocity against dE/dk",
            _lattice((128, 1.0), (64, 0.5), dims=1),
            {
                "m": (_float, 1.0),
                "center_steps": (_int, 4),
                "width_steps": (_float, 1.5),
                "n_modes": (_int, 9),
                "window": (_int, 8),
            },
            _run_kg_wavepacket,
        ),
        Scenario(
            "kg-two-particle",
            "Two free Klein-Gordon particles: mode enumeration and product-state residuals",
            _lattice((64, 0.5), (16, 0.5)),
            {"m": (_float, 1.0), "k1_steps": (_intlist, (1,)), "k2_steps": (_intlist, (-1,)), "tol": (_float, 1e-9)},
            _run_kg_two_particle,
        ),
        Scenario(
            "nr-potential",
            "Non-relativistic harmonic oscillator from an approximate kernel",
            _lattice((128, 0.1), (32, 0.6), dims=1),
            {"m": (_float, 1.0), "omega": (_float, 0.5), "x0": (_float, 1.0), "window": (_int, 32)},
            _run_nr_potential,
        ),
        Scenario(
            "dirac-plane-wave",
            "Dirac plane-wave spinors: constraint and covariant-operator residuals",
            _lattice(_T, (16, 0.5)),
            {"m": (_float, 0.4), "k_steps": (_intlist, (1,)), "rep": (_choice("dirac", "majorana"), "dirac")},
            _run_dirac_plane_wave,
        ),
        Scenario(
            "lorentz-boost",
            "Boosted Klein-Gordon labels and mixed/decoupled constraints",
            # k = 0.3 and E' = 0.4 land on the default grids at v = 0.6, m = 0.4
            _lattice((64, 2 * math.pi / 25.6), (32, 2 * math.pi / 9.6)),
            {"m": (_float, 0.4), "k_steps": (_intlist, (1,)), "v": (_float, 0.6)},
            _run_lorentz_boost,
        ),
        Scenario(
            "gauge-u1",
            "U(1) gauge phase: residual invariance and momentum shifts",
            _lattice((32, 0.2), (64, 0.25)),
            {
                "lambda": (_choice("linear", "sine"), "sine"),
                "amplitude": (_float, 0.1),
                "steps": (_int, 2),
                "m": (_float, 1.0),
                "k_steps": (_intlist, (1,)),
            },
            _run_gauge_u1,
        ),
        Scenario(
            "convergence-study",
            "Incommensurate qubit fidelity and CCR error as lattices double",
            {"dt": (_float, 0.1)},
            {"gap": (_float, 1.3), "sizes": (_intlist, (64, 128, 256)), "window": (_int, 32), "ccr_extent": (_float, 16.0)},
            _run_convergence_study,
        ),
    ]
}


def list_scenarios() -> list[tuple[str, str]]:
    return [(s.name, s.description) for s in SCENARIOS.values()]


# -- config ------------------------------------------------------------------


def _parse_section(section: dict, schema: dict, label: str) -> dict:
    unknown = sorted(set(section) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{label}]: {', '.join(unknown)}")
    out = {}
    for key, (parse, default) in schema.items():
        if key in section:
            try:
                out[key] = parse(section[key].strip())
            except ValueError as exc:
                raise ConfigError(f"[{label}] {key} = {section[key]!r}: {exc}") from None
        else:
            out[key] = default
    return out


def load_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario file (text)."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    extra = sorted(set(cp.sections()) - {"scenario", "lattice", "physics"})
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(extra)}")
    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    head = _parse_section(dict(cp["scenario"]), {"name": (str, None), "seed": (_int, 0)}, "scenario")
    name = head["name"]
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; run `list` to see the options")
    sc = SCENARIOS[name]
    lat = _parse_section(dict(cp["lattice"]) if cp.has_section("lattice") else {}, sc.lattice, "lattice")
    phys = _parse_section(dict(cp["physics"]) if cp.has_section("physics") else {}, sc.physics, "physics")
    cfg = ScenarioConfig(name, head["seed"], lat, phys)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    lat = cfg.lattice
    for name in ("y", "z"):
        if (lat.get(f"d_{name}") is None) != (lat.get(f"d{name}") is None):
            raise ConfigError(f"d_{name} and d{name} must be given together")
    if lat.get("d_z") is not None and lat.get("d_y") is None:
        raise ConfigError("a z axis needs a y axis")
    for key, val in lat.items():
        if val is None:
            continue
        if key.startswith("d_") and val < 2:
            raise ConfigError(f"{key} must be at least 2")
        if not key.startswith("d_") and val <= 0:
            raise ConfigError(f"{key} must be positive")
    ph = cfg.physics
    if "m" in ph and ph["m"] < 0:
        raise ConfigError("m must be non-negative")
    if cfg.name == "nr-potential" and ph["m"] <= 0:
        raise ConfigError("nr-potential needs m > 0")
    if "v" in ph and abs(ph["v"]) >= 1:
        raise ConfigError("boost velocity must satisfy |v| < 1")
    if "sizes" in ph and any(d < 2 for d in ph["sizes"]):
        raise ConfigError("sizes must be at least 2")
    if "n_modes" in ph and ph["n_modes"] < 1:
        raise ConfigError("n_modes must be positive")
    # build the space once so lattice-level domain errors surface before any work
    try:
        if "d_x" in lat:
            space = _space(lat, 4 if cfg.name == "dirac-plane-wave" else 1)
            for key in ("k_steps", "k1_steps", "k2_steps"):
                if key in ph:
                    _k_from_steps(space, ph[key])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


# -- output ------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def wavefunction_csv(v: StateVector) -> str:
    """CSV text ``t,x[,y,z],spin,re,im`` with one row per grid point and spin index."""
    space = v.space
    cols = ["t"] + [a.role for a in space.spatial_axes] + ["spin", "re", "im"]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    amps = v.tensor()
    coords = [a.positions for a in space.axes]
    for idx in np.ndindex(*space.shape):
        vals = [f"{coords[i][j]:.17g}" for i, j in enumerate(idx[:-1])]
        a = amps[idx]
        vals += [str(idx[-1]), f"{a.real:.17g}", f"{a.imag:.17g}"]
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def run_scenario(cfg: ScenarioConfig, opts: Options | None = None, record_timings: bool = False) -> tuple[dict, str | None]:
    """Run a validated scenario; returns the report and the CSV text (or ``None``)."""
    opts = opts or Options()
    start = time.perf_counter()
    out = SCENARIOS[cfg.name].run(cfg, opts)
    elapsed = time.perf_counter() - start
    report = {
        "scenario": cfg.name,
        "params": {"seed": cfg.seed, "lattice": cfg.lattice, **out.params},
        "snap_errors": out.snap_errors,
        "residuals": out.residuals,
        "fidelities": out.fidelities,
        "timings": {"total_seconds": elapsed} if record_timings else {},
    }
    csv = wavefunction_csv(out.state) if out.state is not None else None
    return _clean(report), csv


def _write_outputs(outdir: str, report: dict, csv: str | None) -> None:
    os.makedirs(outdir, exist_ok=True)
    files = {"report.json": json.dumps(report, indent=2, sort_keys=True) + "\n"}
    if csv is not None:
        files["wavefunction.csv"] = csv
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{name}.")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(outdir, name)))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qspacetime", description="Run constraint-quantization scenarios.")
    p.add_argument("--output-dir", default="out", help="directory for report.json and wavefunction.csv")
    p.add_argument("--dense-budget", type=int, default=DEFAULT_DENSE_BUDGET, help="largest total_dim for dense cross-checks")
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS, help="iteration cap for the kernel eigensolver")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative eigensolver tolerance")
    p.add_argument("--record-timings", action="store_true", help="store wall-clock timings (breaks byte identity)")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    sub.add_parser("list", help="list scenarios")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "list":
        for name, desc in list_scenarios():
            print(f"{name:<18} {desc}")
        return EXIT_OK
    if args.dense_budget < 0 or args.max_iters < 1 or not args.tol > 0:
        print("error: --dense-budget >= 0, --max-iters >= 1 and --tol > 0 are required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = load_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    opts = Options(args.dense_budget, args.max_iters, args.tol)
    try:
        report, csv = run_scenario(cfg, opts, args.record_timings)
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc} (best residual {exc.best_residual:.3g})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _write_outputs(args.output_dir, report, csv)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{cfg.name}: wrote {args.output_dir}")
    return EXIT_OK
