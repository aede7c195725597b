"""Slip-boundary Navier-Stokes and Euler flows on a half cube by mirror reflection.

Half-cube data satisfying the slip conditions is extended by an even/odd
mirror to the periodic cube, solved there with a pseudo-spectral method and
restricted back.  Compatibility of the data (odd normal derivatives of the
tangential components vanishing on the faces) decides whether the extension
keeps its smoothness.
"""
from .compatibility import (
    CompatReport,
    check_compat,
    check_slip,
    counterexample_field,
    forced_traces_report,
)
from .errors import (
    AlignmentError,
    BlowUpError,
    CFLError,
    CompatibilityError,
    ConfigError,
    DomainError,
    FormatError,
    GeometryError,
    InputError,
    MirrorflowError,
    MismatchError,
    ResolutionError,
    SupportError,
)
from .fields import Geometry, GridSpec, SpectralVectorField, VectorField
from .pipeline import inviscid_sweep, make_initial_data, norm_equivalence_report, solve_slip
from .reflection import (
    cube_symmetry_G,
    fit_report,
    mirror_extend_periodic,
    mirror_extend_slab,
    reflect_T,
    restrict_half,
    symmetry_defect,
)
from .solver import SolverConfig, Trajectory, solve, step

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
