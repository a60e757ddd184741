"""Numerical domain of admg-bayes: graphs, G-IW sampling, Gibbs, variational and DAG-baseline inference."""
