"""
Configuration for the delayed cyclic-pattern network toolkit
"""

import math
import os

# Cycle algebra
RANK_RTOL = 1e-10  # singular value cutoff relative to the largest one
DFT_ATOL_SCALE = 1e-8  # DFT column floor is DFT_ATOL_SCALE * sqrt(N * p)
STORAGE_ATOL = 1e-9  # |J Sigma - Sigma P| bound for verify_storage

# Transition graph
SIGN_EPS = 1e-9  # |(J xi)_i| below this is sign-degenerate
MAX_GRAPH_NEURONS = 24

# Delay integration
DEFAULT_STEPS_PER_DELAY = 100  # dt = tau / 100 when tau > 0
DEFAULT_ODE_DT = 0.01  # ms, used when tau == 0
DEFAULT_SETTLE_FRACTION = 0.2
STEP_ALIGNMENT_RTOL = 1e-9  # tolerance on tau / dt being an integer
DEFAULT_MIN_DWELL_FRACTION = 0.5  # of tau, for order-based sign sequences

# Characteristic roots
ROOT_REGION = (-10.0, 10.0, -40.0, 40.0)  # (re_min, re_max, im_min, im_max)
NEWTON_GRID = 41
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 60
ROOT_DEDUP = 1e-6
LAMBERT_BRANCHES = 8  # W_k for |k| <= LAMBERT_BRANCHES seed the Newton search

# Boundary curves
BRANCH_JUMP = 0.05
OMEGA_SCAN_POINTS = 400
ARCCOS_WINDINGS = 3  # m range for the generalized implicit residual
BT_BETA_BRACKET = (1.0 + 1e-9, 1e8)

# beta <-> beta1 inversion
BETA1_BOUNDS = (1e-12, 1.0 - 1e-12)
BETA1_XTOL = 1e-14

# Equilibria
ENUMERATION_MAX_NEURONS = 3
ENVELOPE_SCAN_POINTS = 4001
SN_C0_UPPER = 1.0

# Parallel sweeps
SWEEP_WORKERS = int(os.environ.get("CYCLENET_WORKERS", min(8, os.cpu_count() or 1)))

# Logging
LOG_LEVEL = os.environ.get("CYCLENET_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

TWO_PI = 2.0 * math.pi
