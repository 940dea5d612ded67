"""Certify and solve generalized absolute value equations ``A x + B |x| = b``."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .certify import (
    BoxDiagonal,
    Certificate,
    Condition,
    FinalVerdict,
    GaveInstance,
    LcpInstance,
    Verdict,
    box_from_unit,
    hierarchy_report,
    pmatrix_certificate,
    reduce_to_lcp,
    sampled_rho_box,
    spectral_certificates,
    vertex_regularity_certificate,
)
from .errors import (
    CapExceeded,
    DimensionError,
    ImpossiblePair,
    InconsistencyDetected,
    NoConvergence,
    ParseError,
    RangeViolation,
    SingularMatrix,
    SingularSum,
)
from .numkernel import (
    DetSign,
    det_sign,
    lu_solve,
    singular_values,
    spectral_radius_general,
    spectral_radius_nonneg,
)
from .solve import (
    SolveReport,
    SolveVerdict,
    enumerate_branch_solutions,
    newton_solve,
    picard_solve,
    residual,
)
