"""Spectral laboratory for the fractional heat semigroup on a periodic box."""

from .errors import (
    ContaminationError,
    ConvergenceError,
    FracheatError,
    PreconditionError,
    RepresentationError,
)
from .grid import (
    Field,
    GaussianBump,
    GridSpec,
    PlaneWave,
    RandomBandlimited,
    RandomBumps,
    TimeSeries,
    WavePackets,
    WindowedPowerlaw,
    contamination,
    dilate_spectrum,
    geometric_times,
    inner_product,
    l2_spectral,
    make_grid,
    read_field,
    synthesize_field,
    transform,
    uniform_times,
    write_field,
)
from .semigroup import (
    Alpha,
    Multiplier,
    apply_semigroup,
    axis_derivative,
    duhamel,
    fractional_derivative,
    gradient_magnitude,
    kernel,
    riesz_transform,
    semigroup_series,
)
from .norms import (
    DyadicPartition,
    NormSpec,
    besov_norm,
    bmo_norm,
    default_partition,
    lp_block,
    low_block,
    lp_norm,
    mixed_norm,
    sobolev_norm,
)
from .estimates import (
    DECAY_BATTERY,
    RatioReport,
    Triplet,
    besov_embedding_ratio,
    check_admissible,
    check_scaling_relation,
    conjugate,
    decay_fit,
    dilation_sweep,
    homogeneous_ratio,
    inhomogeneous_ratio,
    kernel_mixed_norm_fit,
    parabolic_ratio,
    run_decay_case,
)
from .nse import (
    PicardReport,
    PotentialReport,
    VectorField,
    bilinear_form,
    divergence,
    estimate_bilinear_constant,
    leray_project,
    perturbed_taylor_green,
    regularity_check,
    solve_nse_picard,
    solve_potential_eq,
    taylor_green,
)

__version__ = "0.1.0"
