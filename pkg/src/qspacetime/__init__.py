"""
Finite-dimensional laboratory for constraint-based relativistic quantum mechanics.

Time, space and spin are tensor factors of one Hilbert space. Physical states
are kernel vectors of linear Hamiltonian and momentum constraints; emergent
Schrödinger, Klein-Gordon and Dirac dynamics are read off by conditioning on
coordinate eigenstates.
"""

from .axis import (
    DomainError,
    FactorOp,
    LatticeAxis,
    clock,
    dft_matrix,
    make_axis,
    momentum_op,
    plane_wave,
    position_op,
    shift,
)
from .constraint import (
    ConstraintSet,
    ScalarField,
    dirac_constraints,
    dirac_covariant_op,
    dirac_first_order_op,
    dispersion,
    kg_constraints,
    kg_quadratic_op,
    nr_constraint,
    pw_constraint,
    two_particle_constraints,
)
from .product import (
    BudgetError,
    ProductOperator,
    ProductSpace,
    StateVector,
    apply,
    commutator_residual,
    dense,
    diagonal,
    embed,
    identity,
    make_space,
    random_state,
)
from .slices import (
    WavefunctionGrid,
    condition,
    group_velocity,
    packet_positions,
    slice_evolution_check,
    spatial_translation_residual,
    temporal_translation_residual,
    wavefunction_grid,
)
from .solve import (
    ConvergenceError,
    KernelResult,
    SuperpositionSpec,
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
from .spinor import SpinorRep, alpha_beta, gamma_set, spinor_eigensystem, spinor_hamiltonian
from .symmetry import (
    BoostParams,
    GaugeTransform,
    apply_gauge,
    boost,
    boost_labels,
    boosted_constraints_mixed,
    conjugate_gauge,
    decouple_boosted,
    gauge_momentum_shift_residual,
    gauge_transform,
)

__version__ = "0.1.0"
