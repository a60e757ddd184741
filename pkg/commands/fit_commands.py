"""
Model-fitting commands: fit (single fit or k-fold cross-validation) and
predict (fit on one file, score another).
"""

import logging
from typing import Any, Dict

import numpy as np
import pandas as pd

from admg.data import kfold_splits
from admg.rng import make_stream
from commands.common import check_burnin, model_priors, required_data, single_graph
from core.config import RunConfig
from core.constants import STREAM_FOLDS
from core.context import RunContext
from engines import get_engine

logger = logging.getLogger(__name__)

SAMPLER_ENGINES = ("gibbs", "dag-baseline")


class FitCommands:
    """Commands that run one or more inference engines."""

    def _check(self, config: RunConfig) -> None:
        if any(e in SAMPLER_ENGINES for e in config.engines):
            check_burnin(config)

    def fit(self, config: RunConfig, context: RunContext) -> Dict[str, Any]:
        """
        Run every selected engine and write traces, summaries, bound (vb)
        and diagnostics. With --folds, run k-fold cross-validation instead.
        Zero iterations is a dry run: only the manifest is written.
        """
        graph = single_graph(config)
        data = required_data(config.data, "data", graph)
        if config.iterations == 0:
            return {"message": "dry run (0 iterations): manifest only"}
        self._check(config)
        priors = model_priors(graph, config, data)

        if config.folds:
            return self._cross_validate(graph, priors, data, config, context)

        messages = []
        for name in config.engines:
            engine = get_engine(name)
            result = engine.fit(graph, priors, data, config)
            context.write_frame("trace", result.trace, prefix=name)
            context.write_frame("summary", result.summary, prefix=name)
            if result.bound:
                bound = pd.DataFrame({"sweep": np.arange(len(result.bound)), "bound": result.bound})
                context.write_frame("bound", bound, prefix=name)
            context.write_json(
                "diagnostics",
                {**result.diagnostics, "predictive_method": result.predictive_method},
                prefix=name,
            )
            messages.append(f"{name}: {len(result.samples)} draws")
        return {"message": "; ".join(messages)}

    def _cross_validate(self, graph, priors, data, config: RunConfig, context: RunContext):
        splits = kfold_splits(data, config.folds, make_stream(config.seed, STREAM_FOLDS))
        rows = []
        for name in config.engines:
            engine = get_engine(name)
            for fold, (train, test) in enumerate(splits):
                result = engine.fit(graph, priors, train, config)
                loglik = engine.predictive_loglik(result, test)
                rows.append((name, fold, test.d, loglik, result.predictive_method))
                logger.info("%s fold %d: %.4f", name, fold, loglik)
        table = pd.DataFrame(
            rows, columns=["engine", "fold", "n_test", "predictive_loglik", "method"]
        )
        context.write_frame("cv", table)
        means = table.groupby("engine", sort=False)["predictive_loglik"].mean()
        return {
            "message": ", ".join(f"{e}: mean predictive LL {v:.4f}" for e, v in means.items()),
            "mean_predictive_loglik": {e: float(v) for e, v in means.items()},
        }

    def predict(self, config: RunConfig, context: RunContext) -> Dict[str, Any]:
        """Fit on --data and report the average predictive log-likelihood of --test."""
        graph = single_graph(config)
        data = required_data(config.data, "data", graph)
        test = required_data(config.test, "test", graph)
        self._check(config)
        priors = model_priors(graph, config, data)

        payload = {}
        for name in config.engines:
            engine = get_engine(name)
            result = engine.fit(graph, priors, data, config)
            payload[name] = {
                "predictive_loglik": engine.predictive_loglik(result, test),
                "method": result.predictive_method,
                "n_test": test.d,
                "draws": len(result.samples),
            }
        context.write_json("predict", payload)
        return {
            "message": ", ".join(f"{e}: {v['predictive_loglik']:.4f}" for e, v in payload.items()),
            "predictive_loglik": {e: v["predictive_loglik"] for e, v in payload.items()},
        }
