"""Band structure and hopping estimates for a three-beam honeycomb optical lattice."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BracketingFailure,
    ConfigError,
    ConvergenceError,
    DegenerateCellError,
    EigensolverFailure,
    HoneycombError,
    NonzeroMass,
    NotCritical,
    NumericalError,
    RankDeficientFit,
    TriangleInequalityViolated,
    TwoMinimaLost,
)
from .geometry import BeamConfig, LatticeVectors, build_geometry, dipole_depth, k_path  # noqa: F401
from .potential import (  # noqa: F401
    CriticalPoint,
    classify_point,
    field_amplitude,
    locate_minima,
    locate_saddles,
    potential_value,
)
from .tightbinding import DiracPair, HoppingSet, tb_bands, tb_dirac_points, tb_dos, tb_scales  # noqa: F401
from .planewave import (  # noqa: F401
    BandGrid,
    FourierPotential,
    bloch_matrix,
    critical_parameter,
    extract_t0_numeric,
    fit_critical_scaling,
    fourier_coefficients,
    min_gap,
    solve_bands,
)
from .semiclassics import (  # noqa: F401
    HarmonicResult,
    InstantonResult,
    experimental_bounds,
    fluctuation_prefactor,
    instanton_action,
    instanton_trajectory,
    t0_harmonic,
    t0_semiclassical,
)
