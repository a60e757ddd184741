"""
Constants and defaults for admg-bayes.

Centralized location for:
- Exit codes
- Numerical tolerances
- Sampler and prior defaults
- Output formatting
- Environment variable names read by the harness
"""

from typing import Dict, Tuple

__version__ = "0.3.0"

# =============================================================================
# EXIT CODES
# =============================================================================

EXIT_SUCCESS = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


# =============================================================================
# NUMERICAL TOLERANCES
# =============================================================================

# Absolute slack for "zero entry" checks on externally supplied matrices.
# compose() writes exact zeros, so only inputs need it.
ZERO_TOLERANCE = 1e-10

# Relative symmetry slack for supplied covariance matrices
SYMMETRY_TOLERANCE = 1e-8

# Diagonal loading schedule used when projecting the initial V onto M+(G)
JITTER_START = 1e-8
JITTER_MAX_TRIES = 40


# =============================================================================
# SAMPLER DEFAULTS
# =============================================================================

DEFAULT_BURN_IN = 1000
DEFAULT_THIN = 5
DEFAULT_ITERATIONS = 5000

# Proposals per sampling-importance-resampling V-step
DEFAULT_SIR_M = 50

# Frozen V-draw pool for the variational bound
DEFAULT_POOL_M = 200

# Variational coordinate ascent
DEFAULT_MAX_SWEEPS = 100
DEFAULT_VB_TOLERANCE = 1e-5
DEFAULT_WARMUP_SWEEPS = 3
# Re-anchor the frozen pool once its reweighted ESS drops below this fraction of m
POOL_ESS_FLOOR = 0.25
# A bound drop larger than this multiple of the tolerance aborts the run
DIVERGENCE_FACTOR = 10.0

# Draws used by the variational plug-in predictive
DEFAULT_PREDICTIVE_DRAWS = 200

# Normalizing-constant estimation in the score command
DEFAULT_NORMCONST_M = 2000

# Weighted effective sample size below which a warning is logged
MIN_EFFECTIVE_SAMPLE_SIZE = 2.0

VSTEP_MODES: Tuple[str, ...] = ("faithful", "sir")
ORDER_STRATEGIES: Tuple[str, ...] = ("given", "greedy")
ENGINE_NAMES: Tuple[str, ...] = ("gibbs", "vb", "dag-baseline")

# Draws written by sample-giw
DEFAULT_GIW_SAMPLES = 1000
DEFAULT_CHAINS = 1
DEFAULT_WORKERS = 1

# Sub-stream keys under the master seed (chains use 0, 1, ...)
STREAM_SPLIT = 7
STREAM_FOLDS = 8
STREAM_DRAWS = 9
STREAM_CANDIDATES = 10


# =============================================================================
# PRIOR DEFAULTS
# =============================================================================

# Smallest integer with a finite prior mean U/(delta-2)
DEFAULT_DELTA = 3.0
DEFAULT_B_MEAN = 0.0
DEFAULT_B_VARIANCE = 1.0
DEFAULT_INTERCEPT_VARIANCE = 1e6

# Coefficient pinned on each latent's first outgoing edge, and on the
# ancillary-latent edge into the lexicographically smaller child
FIXED_LOADING = 1.0


# =============================================================================
# BENCHMARK / CROSS-VALIDATION
# =============================================================================

DEFAULT_TRIALS = 10
DEFAULT_TEST_FRACTION = 0.2
SIGNIFICANCE_LEVEL = 0.05


# =============================================================================
# OUTPUT
# =============================================================================

SIGNIFICANT_DIGITS = 17
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"

OUTPUT_FILES: Dict[str, str] = {
    "manifest": "manifest.json",
    "samples": "samples.csv",
    "normconst": "normconst.json",
    "score": "score.csv",
    "trace": "trace.csv",
    "summary": "summary.csv",
    "bound": "bound.csv",
    "cv": "cv.csv",
    "diagnostics": "diagnostics.json",
    "predict": "predict.json",
    "benchmark_table": "benchmark.txt",
    "benchmark_json": "benchmark.json",
}


# =============================================================================
# ENVIRONMENT
# =============================================================================

ENV_OUTPUT_DIR = "ADMG_OUTPUT_DIR"
ENV_LOG_LEVEL = "ADMG_LOG_LEVEL"
ENV_DEFAULT_M = "ADMG_DEFAULT_M"
ENV_POOL_M = "ADMG_POOL_M"

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_LOG_LEVEL = "WARNING"
