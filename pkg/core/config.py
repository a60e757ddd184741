"""
Run configuration for admg-bayes.

Contains:
- RunConfig: every setting a command reads, with range checks and a
  manifest round trip so a run can be replayed exactly
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

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
    ENGINE_NAMES,
    ORDER_STRATEGIES,
    VSTEP_MODES,
)
from core.errors import ValidationError

# Commands that draw random numbers and therefore need --seed
SAMPLING_COMMANDS = ("sample-giw", "normconst", "score", "fit", "benchmark", "predict")


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one CLI run. Field names match the command-line flags.

    Attributes:
        command: Command name
        graph: Graph file paths (score takes several, the others one)
        data / test: Training and held-out data files
        manifest: Manifest to replay (replay only)
        out: Output directory (None lets the harness pick one)
        seed: Master seed
        delta / u_scale: G-IW prior; u_scale None means the mean data variance
        b_mean / b_variance: Gaussian prior on free coefficients
        intercepts: Model intercepts instead of centring the data
        iterations / burnin / thin / mode / m / order / chains / workers: Gibbs settings
        max_sweeps / tolerance / pool_m: Variational settings
        engine: Comma-separated engine names
        folds: Cross-validation folds (None for a single fit)
        samples: Draw count; the command picks a default when None
        trials: Benchmark seeds (seed, seed + 1, ...)
    """

    command: str
    graph: Tuple[str, ...] = ()
    data: Optional[str] = None
    test: Optional[str] = None
    manifest: Optional[str] = None
    out: Optional[str] = None
    seed: Optional[int] = None
    delta: float = DEFAULT_DELTA
    u_scale: Optional[float] = None
    b_mean: float = DEFAULT_B_MEAN
    b_variance: float = DEFAULT_B_VARIANCE
    intercepts: bool = False
    iterations: int = DEFAULT_ITERATIONS
    burnin: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    mode: str = "sir"
    m: int = DEFAULT_SIR_M
    order: str = "greedy"
    chains: int = DEFAULT_CHAINS
    workers: int = DEFAULT_WORKERS
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    tolerance: float = DEFAULT_VB_TOLERANCE
    pool_m: int = DEFAULT_POOL_M
    engine: str = "gibbs"
    folds: Optional[int] = None
    samples: Optional[int] = None
    trials: int = DEFAULT_TRIALS

    @property
    def engines(self) -> Tuple[str, ...]:
        return tuple(e.strip() for e in self.engine.split(",") if e.strip())

    @classmethod
    def from_options(cls, command: str, options: Mapping[str, Any]) -> "RunConfig":
        """Build from parsed flags, ignoring unknown keys and unset (None) values."""
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in options.items() if k in known and v is not None}
        if "graph" in values:
            values["graph"] = tuple(values["graph"])
        return cls(command=command, **{k: v for k, v in values.items() if k != "command"})

    def validate(self) -> None:
        """Raise ValidationError on the first out-of-range setting."""
        checks = [
            (self.iterations >= 0, f"iterations must be >= 0, got {self.iterations}"),
            (self.burnin >= 0, f"burn-in must be >= 0, got {self.burnin}"),
            (self.thin >= 1, f"thinning must be >= 1, got {self.thin}"),
            (self.m >= 1, f"m must be >= 1, got {self.m}"),
            (self.pool_m >= 1, f"pool m must be >= 1, got {self.pool_m}"),
            (self.chains >= 1, f"chains must be >= 1, got {self.chains}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
            (self.max_sweeps >= 0, f"max sweeps must be >= 0, got {self.max_sweeps}"),
            (self.tolerance > 0, f"tolerance must be positive, got {self.tolerance}"),
            (self.trials >= 1, f"trials must be >= 1, got {self.trials}"),
            (self.delta > 0, f"delta must be positive, got {self.delta}"),
            (self.b_variance > 0, f"B-prior variance must be positive, got {self.b_variance}"),
            (self.u_scale is None or self.u_scale > 0, f"U scale must be positive, got {self.u_scale}"),
            (self.folds is None or self.folds >= 2, f"folds must be >= 2, got {self.folds}"),
            (self.samples is None or self.samples >= 1, f"samples must be >= 1, got {self.samples}"),
            (self.mode in VSTEP_MODES, f"mode must be one of {VSTEP_MODES}, got '{self.mode}'"),
            (self.order in ORDER_STRATEGIES,
             f"order must be one of {ORDER_STRATEGIES}, got '{self.order}'"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValidationError(message)
        if not self.engines:
            raise ValidationError("at least one engine is required")
        unknown = [e for e in self.engines if e not in ENGINE_NAMES]
        if unknown:
            raise ValidationError(f"unknown engine(s) {unknown}; choose from {ENGINE_NAMES}")
        if self.command in SAMPLING_COMMANDS:
            if self.seed is None:
                raise ValidationError(f"'{self.command}' draws random numbers and needs --seed")
            if self.seed < 0:
                raise ValidationError(f"seed must be >= 0, got {self.seed}")

    def to_manifest(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["graph"] = list(self.graph)
        return payload

    @classmethod
    def from_manifest(cls, payload: Mapping[str, Any]) -> "RunConfig":
        if "command" not in payload:
            raise ValidationError("manifest config has no command")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ValidationError(f"manifest config has unknown keys {unknown}")
        values = dict(payload)
        values["graph"] = tuple(values.get("graph", ()))
        return cls(**values)

    def with_out(self, out: Optional[str]) -> "RunConfig":
        return replace(self, out=out)
