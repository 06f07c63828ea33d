"""Ground states of the Schrodinger-Poisson system by variational reduction."""

from .errors import (
    DomainMismatchError,
    GridMismatchError,
    InvalidGridError,
    InvalidScaleError,
    NonuniquenessError,
    OracleSizeError,
    SpgroundError,
    StagnationError,
    UnsupportedCombinationError,
    UnsupportedExponentError,
    ValidationError,
    ZeroFieldError,
)
from .radial import (
    MonotoneCubic,
    RadialField,
    RadialGrid,
    derivative_matrix,
    dilate,
    dirichlet_form,
    field_like,
    laplacian,
    make_grid,
    new_field,
    norm,
    radial_derivative,
    read_field_csv,
    resample,
    volume_integrate,
    volume_weights,
    write_field_csv,
)
from .poisson import (
    brute_force_coulomb,
    coulomb_energy,
    potential_dirichlet_energy,
    solve_poisson,
)
from .energies import (
    CriticalPerturbed,
    CriticalPure,
    FiberCoefficients,
    Potential,
    ProblemSpec,
    Subcritical,
    constraint_differential,
    differential,
    energy_from_coefficients,
    eval_J,
    eval_action,
    eval_energy,
    fiber_coefficients,
    fiber_differential,
    gradient,
    h1_inner,
    make_problem,
    manifold_residual,
    pohozaev_residual,
    residual_from_coefficients,
    riesz_h1,
)
from .manifolds import (
    dilation_generator,
    fiber_dilation,
    fiber_max,
    fiber_max_from_coefficients,
    fiber_scalar,
    manifold_kind,
    project_to_manifold,
    slide_to_manifold,
)
from .critical import (
    SOBOLEV_CONSTANT_3D,
    BubbleParams,
    CertificateResult,
    NonexistenceCertificate,
    bubble_scaling_table,
    critical_level_certificate,
    cutoff_bubble,
    estimate_S,
    gradient_excess_slope,
    nonexistence_certificate,
    talenti_bubble,
)
from .solver import (
    LEVEL_SEMANTICS,
    SolveOptions,
    SolveReport,
    concentration_profile,
    continuation_c_of_V,
    mass_radius,
    probe_upper_bounds,
    random_bump_field,
    solve_ground_state,
)

__version__ = "0.1.0"
