"""Entropy production and memory effects for a qubit coupled to one thermal mode.

A numerical laboratory that evolves the qubit + single-bosonic-mode system
exactly, evaluates the closed-form master-equation rates of the reduced
dynamics, compares five definitions of the entropy-production rate, and
classifies memory effects (CP-/P-divisibility, information backflow)
against the sign of the map-level entropy production.
"""

from .jcdyn import (
    CutoffLeakageError,
    ConfigError,
    JointDynamics,
    JointObservables,
    JointState,
    ModelParams,
    NumericsConfig,
    auto_cutoff,
    evolve_joint,
    instantaneous_rates,
    jc_propagator,
    joint_observables,
    time_derivative_observables,
)
from .qstate import (
    BlochVector,
    DensityMatrix,
    DimensionMismatchError,
    InvalidStateError,
    bloch_from_density,
    density_from_bloch,
    partial_trace_bath,
    partial_trace_system,
    relative_entropy,
    thermal_state,
    von_neumann_entropy,
)
from .rates import (
    CoefficientSet,
    FixedPoint,
    RateSet,
    SingularRateError,
    coefficients,
    fixed_point,
    generator_apply,
    integrate_master_equation,
    omega_n,
    rate_set,
    thermal_fixed_point,
)
from .eprod import (
    EntropySample,
    UnresolvableTemperatureError,
    effective_bath_beta,
    entropy_production_row,
    entropy_production_series,
    sigma_co,
    sigma_el,
    sigma_es,
    sigma_fp,
)
from .memdiv import (
    DivisibilityVerdict,
    blp_contractive,
    cp_divisible,
    divisibility_series,
    p_divisible,
    sigma_fp_min,
    sigma_map_grid,
    sigma_map_sign_analytic,
    theorem1_check,
)

__version__ = "0.1.0"
