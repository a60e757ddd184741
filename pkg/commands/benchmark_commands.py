"""
Benchmark command: ADMG sampler vs ancillary-latent DAG sampler.
"""

from typing import Any, Dict

from admg.baseline_dag import benchmark_compare
from commands.common import check_burnin, model_priors, required_data, single_graph
from core.config import RunConfig
from core.context import RunContext


class BenchmarkCommands:
    """Timing and predictive comparison over several seeds."""

    def benchmark(self, config: RunConfig, context: RunContext) -> Dict[str, Any]:
        """Seeds seed .. seed + trials - 1, one train/test split each."""
        graph = single_graph(config)
        data = required_data(config.data, "data", graph)
        check_burnin(config)
        seeds = [config.seed + k for k in range(config.trials)]
        report = benchmark_compare(
            graph,
            data,
            config.iterations,
            seeds,
            priors=model_priors(graph, config, data),
            burn_in=config.burnin,
            thin=config.thin,
            mode=config.mode,
            m=config.m,
            order=config.order,
        )
        context.write_text("benchmark_table", report.render_table())
        context.write_json("benchmark_json", report.to_dict())
        return {
            "message": f"wall-time ratio admg/dag {report.wall_time_ratio:.3f}, p = {report.p_value}",
            "wall_time_ratio": report.wall_time_ratio,
            "p_value": report.p_value,
        }
