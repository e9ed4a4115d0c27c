"""Exactly solvable time-dependent drives for a two-level system.

The constant-detuning Rabi problem is mapped by a first-order intertwining
(Darboux) operator onto systems with time-dependent detuning whose solutions
stay in closed form. See :mod:`rabi_darboux.darboux` for the construction,
:mod:`rabi_darboux.twolevel` for the equations of motion and the numerical
oracle, and :mod:`rabi_darboux.susy` for the operator-identity checks.
"""

__version__ = "0.1.0"

from .errors import IntegrationError, NumericalError, PoleError, RabiDarbouxError, ValidationError
from .twolevel import (
    GROUND,
    Constant,
    DriveParams,
    MonotoneLimit,
    Oscillatory,
    SpinorState,
    Tabulated,
    TimeGrid,
    Trace,
    evolve,
    norm_drift,
    probability,
    rabi_probability,
    rabi_propagator,
    schrodinger_rhs,
)
from .darboux import (
    QTrajectory,
    TransformSeed,
    WMatrix,
    apply_intertwiner,
    delta_f,
    f1_general,
    f1_monotone,
    f1_oscillatory,
    p1_closed_form,
    psi_pair,
    q_trajectory,
    special_phase_a,
    transformed_solution,
    w_matrix,
)
from .observables import (
    DetuningTrace,
    EnvelopeFloor,
    FrequencyEstimate,
    detuning_trace,
    envelope_minimum,
    oscillation_frequencies,
    period_average,
)
from .susy import (
    ResidualReport,
    factorization_residual,
    intertwining_residual,
    pseudo_adjoint_consistency,
)
