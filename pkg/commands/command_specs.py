"""
Centralized command specifications for admg-bayes.

Every command's flags are declared here in JSON Schema form and bound to
the command-class methods that implement them. The parser, the help text
and the router all read this registry.
"""

from typing import Any, Dict

from core.command_decorator import (
    CommandSpec,
    array_param,
    bool_param,
    float_param,
    int_param,
    make_schema,
    register_command,
    string_param,
)
from core.constants import (
    DEFAULT_B_MEAN,
    DEFAULT_B_VARIANCE,
    DEFAULT_BURN_IN,
    DEFAULT_CHAINS,
    DEFAULT_DELTA,
    DEFAULT_ITERATIONS,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_POOL_M,
    DEFAULT_SIR_M,
    DEFAULT_THIN,
    DEFAULT_TRIALS,
    DEFAULT_VB_TOLERANCE,
    DEFAULT_WORKERS,
    ORDER_STRATEGIES,
    VSTEP_MODES,
)
from core.errors import ValidationError

# =============================================================================
# SHARED FLAGS
# =============================================================================

GRAPH = {"graph": array_param("Graph file (repeat for several candidates)")}
OUT = {"out": string_param("Output directory")}
SEED = {"seed": int_param("Master seed", minimum=0)}

PRIOR = {
    "delta": float_param("G-IW degrees-of-freedom parameter", default=DEFAULT_DELTA),
    "u_scale": float_param("G-IW scale: U = u_scale * I (default: mean data variance)"),
}

COEFFICIENT_PRIOR = {
    "b_mean": float_param("Prior mean of free coefficients", default=DEFAULT_B_MEAN),
    "b_variance": float_param("Prior variance of free coefficients", default=DEFAULT_B_VARIANCE),
    "intercepts": bool_param("Model intercepts instead of centring the data"),
}

ORDER = {
    "order": string_param(
        "Sampling-order strategy", enum=list(ORDER_STRATEGIES), default="greedy"
    ),
}

SAMPLER = {
    "iterations": int_param("Gibbs sweeps (0: dry run)", minimum=0, default=DEFAULT_ITERATIONS),
    "burnin": int_param("Sweeps discarded as burn-in", minimum=0, default=DEFAULT_BURN_IN),
    "thin": int_param("Keep every n-th sweep", minimum=1, default=DEFAULT_THIN),
    "mode": string_param("V-step mode", enum=list(VSTEP_MODES), default="sir"),
    "m": int_param("Proposals per resampled V draw", minimum=1, default=DEFAULT_SIR_M),
    **ORDER,
}

CHAINS = {
    "chains": int_param("Independent chains", minimum=1, default=DEFAULT_CHAINS),
    "workers": int_param("Worker processes for the chains", minimum=1, default=DEFAULT_WORKERS),
}

VARIATIONAL = {
    "max_sweeps": int_param("Variational sweeps", minimum=0, default=DEFAULT_MAX_SWEEPS),
    "tolerance": float_param("Bound change that stops the sweeps", default=DEFAULT_VB_TOLERANCE),
    "pool_m": int_param("Size of the reweighted G-IW pool", minimum=1, default=DEFAULT_POOL_M),
}

ENGINE = {
    "engine": string_param("Comma-separated engines: gibbs, vb, dag-baseline", default="gibbs"),
}


def _props(*groups: Dict[str, Any], **extra: Dict[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = {}
    for group in groups:
        merged.update(group)
    merged.update(extra)
    return merged


# =============================================================================
# G-IW COMMANDS
# =============================================================================

SAMPLE_GIW_SPEC = CommandSpec(
    name="sample-giw",
    description="Draw covariance matrices from a G-IW distribution",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, ORDER,
            mode=string_param("faithful: weighted proposals; sir: resampled draws",
                              enum=list(VSTEP_MODES), default="sir"),
            m=int_param("Proposals per resampled draw", minimum=1, default=DEFAULT_SIR_M),
            samples=int_param("Number of draws", minimum=1),
        ),
        required=["graph"],
    ),
    outputs=("samples",),
    returns_description="Draw count and ESS",
)

NORMCONST_SPEC = CommandSpec(
    name="normconst",
    description="Estimate the log normalizing constant of a G-IW distribution",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, ORDER,
            samples=int_param("Importance samples", minimum=1),
        ),
        required=["graph"],
    ),
    outputs=("normconst",),
    returns_description="log I_G with its standard error",
)

SCORE_SPEC = CommandSpec(
    name="score",
    description="Rank covariance graphs by marginal likelihood",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, ORDER,
            data=string_param("Training data CSV"),
            samples=int_param("Importance samples per normalizing constant", minimum=1),
        ),
        required=["graph", "data"],
    ),
    outputs=("score",),
    returns_description="The best-scoring graph",
)

# =============================================================================
# FITTING COMMANDS
# =============================================================================

FIT_SPEC = CommandSpec(
    name="fit",
    description="Fit a Gaussian ADMG model with one or more engines",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, COEFFICIENT_PRIOR, SAMPLER, CHAINS, VARIATIONAL, ENGINE,
            data=string_param("Training data CSV"),
            folds=int_param("Cross-validation folds", minimum=2),
            samples=int_param("Posterior draws taken from the variational fit", minimum=1),
        ),
        required=["graph", "data"],
    ),
    outputs=("trace", "summary", "bound", "diagnostics", "cv"),
    returns_description="Draw counts per engine, or mean held-out log-likelihood",
)

PREDICT_SPEC = CommandSpec(
    name="predict",
    description="Fit on training data and score held-out data",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, COEFFICIENT_PRIOR, SAMPLER, CHAINS, VARIATIONAL, ENGINE,
            data=string_param("Training data CSV"),
            test=string_param("Held-out data CSV"),
            samples=int_param("Posterior draws taken from the variational fit", minimum=1),
        ),
        required=["graph", "data", "test"],
    ),
    outputs=("predict",),
    returns_description="Average predictive log-likelihood per engine",
)

BENCHMARK_SPEC = CommandSpec(
    name="benchmark",
    description="Compare the ADMG sampler with the ancillary-latent DAG sampler",
    input_schema=make_schema(
        properties=_props(
            GRAPH, OUT, SEED, PRIOR, COEFFICIENT_PRIOR, SAMPLER,
            data=string_param("Data CSV, split into train and test per trial"),
            trials=int_param("Seeds per engine", minimum=1, default=DEFAULT_TRIALS),
        ),
        required=["graph", "data"],
    ),
    outputs=("benchmark_table", "benchmark_json"),
    returns_description="Wall-time ratio and paired t-test p-value",
)

REPLAY_SPEC = CommandSpec(
    name="replay",
    description="Re-run the command recorded in a manifest",
    input_schema=make_schema(
        properties=_props(
            OUT,
            manifest=string_param("manifest.json of an earlier run"),
        ),
        required=["manifest"],
    ),
    returns_description="The replayed command's result",
)


def _replay_placeholder(config, context):
    # The router handles replay before dispatch.
    raise ValidationError("replay is handled by the router")


# =============================================================================
# REGISTRATION
# =============================================================================

def register_all_commands(giw_commands, fit_commands, benchmark_commands) -> None:
    """
    Register all commands with their implementations.

    Args:
        giw_commands: GiwCommands instance
        fit_commands: FitCommands instance
        benchmark_commands: BenchmarkCommands instance
    """
    # G-IW
    register_command("sample-giw", giw_commands.sample_giw, SAMPLE_GIW_SPEC)
    register_command("normconst", giw_commands.normconst, NORMCONST_SPEC)
    register_command("score", giw_commands.score, SCORE_SPEC)

    # Fitting
    register_command("fit", fit_commands.fit, FIT_SPEC)
    register_command("predict", fit_commands.predict, PREDICT_SPEC)
    register_command("benchmark", benchmark_commands.benchmark, BENCHMARK_SPEC)

    register_command("replay", _replay_placeholder, REPLAY_SPEC)
