"""
constants.py

Centralized global constants used across the engine.
This file contains tolerances, integrator settings, chart margins,
exit codes, and report metadata shared by the numerical modules
and the command front end.
"""

# ------------------------------------------------------------
# ENGINE METADATA
# Written into every report so regression baselines can be matched.
# ------------------------------------------------------------

ENGINE_NAME = "geom"
ENGINE_VERSION = "1.0.0"
REPORT_SCHEMA = 1


# ------------------------------------------------------------
# TOLERANCES
# ------------------------------------------------------------

DEFAULT_ABS_TOL = 1e-9
DEFAULT_REL_TOL = 1e-9

# |det g| below SINGULAR_DET_THRESHOLD * scale**n is treated as singular
SINGULAR_DET_THRESHOLD = 1e-12

# frame / symmetry checks on curvature output
SYMMETRY_TOL = 1e-8
FRAME_TOL = 1e-10

# invariant drift in the A/B integration above this is a numerical-quality failure
DRIFT_TOL = 1e-6

# curvature identities (Riemann form, Ricci, Einstein tests)
CURVATURE_TOL = 1e-7

# classify_field default
KILLING_TOL = 1e-6

# points must lie on the embedded surface to this accuracy
SURFACE_TOL = 1e-8

# entries below this count as zero when fixing eigenvector signs
ZERO_COMPONENT_TOL = 1e-12


# ------------------------------------------------------------
# DIFFERENTIATION STEPS
# ------------------------------------------------------------

# cbrt(machine epsilon), scaled by max(1, |x|) per coordinate
FD_METRIC_STEP = 6.055454452393343e-06

# epsilon**(1/6) for fourth-order second differences
FD_METRIC_STEP2 = 2.460783300575925e-03

# central differences of sampled vector fields
FD_FIELD_STEP = 1e-5

# central differences of the exponential map, scaled by max(1, |z|)
FD_EXPMAP_STEP = 1e-4


# ------------------------------------------------------------
# INTEGRATOR SETTINGS
# ------------------------------------------------------------

RK4_STEPS = 1024
ORACLE_RTOL = 1e-12
ORACLE_ATOL = 1e-12
ORACLE_METHOD = "DOP853"

# bisection on the Jacobi determinant
BISECT_XTOL = 1e-10
BISECT_MAXITER = 200

# grazing-zero refinement of the determinant scan
GRAZE_THRESHOLD = 1e-4
GRAZE_REFINE = 4

# default arclength scanned for conjugate points
DEFAULT_S_MAX = 10.0

# radius of the sphere used to calibrate the quadratic-form convention
CALIBRATION_RADIUS = 0.3
CALIBRATION_STEPS = 256


# ------------------------------------------------------------
# CHART MARGINS
# ------------------------------------------------------------

POLE_MARGIN = 1e-6
HORIZON_MARGIN = 1e-6


# ------------------------------------------------------------
# EXIT CODES
# ------------------------------------------------------------

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_CHART = 4
EXIT_INVARIANT = 5


# ------------------------------------------------------------
# RUNTIME
# ------------------------------------------------------------

THREADS_ENV_VAR = "GEOM_THREADS"
DEFAULT_MAX_THREADS = 8

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# golden-ratio fraction used to offset deterministic direction sets
GOLDEN_FRACTION = 0.6180339887498949
