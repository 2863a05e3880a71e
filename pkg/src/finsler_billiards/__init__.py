"""Billiards in Finsler and magnetic geometries.

Simulates convex billiards for irreversible norms, locates r-periodic
trajectories as critical points of the cyclic length function, and checks
the counts against closed-form topological lower bounds.
"""

from .billiards import BoundaryState, billiard_step, reflect, trace
from .errors import (
    AmbiguousCanonicalization,
    ChordTooLongForField,
    CoincidentPoints,
    FieldTooStrong,
    FinslerBilliardsError,
    GrazingDeparture,
    GrazingRay,
    InvalidParameters,
    NoConvergence,
    NoExit,
    NotOnFiguratrix,
    NotOnIndicatrix,
    SingularMass,
    ZeroVector,
    ZeroWinding,
)
from .geodesics import GeodesicSegment, connect, integrate_geodesic, intersect_forward
from .metrics import (
    EuclideanMetric,
    FinslerMetric,
    LagrangianMetric,
    MagneticMetric,
    MinkowskiMetric,
    RiemannianMetric,
    magnetic_indicatrix_params,
    metric_from_spec,
    validate_field_strength,
)
from .search import (
    CyclicPolygon,
    OrbitRecord,
    SearchConfig,
    canonicalize,
    find_critical,
    grad_length,
    in_g_epsilon,
    length_function,
    make_polygon,
    morse_index,
    orbit_record_dict,
    rotation_number,
)
from .tables import (
    BoundaryPoint,
    ConvexTable,
    conormal,
    ellipsoid_table,
    project_to_boundary,
    table_from_spec,
    tangent_basis,
)
from .topology import CohomologyProfile, betti_numbers, cat_lower_bound, orbit_lower_bound
from .vectors import Covector, Vector

__version__ = "0.1.0"
