#!/usr/bin/env python3
"""
Write a synthetic model's graph file and simulated data.

Usage:
    python scripts/make_synthetic_data.py --model industrialization --rows 75 --seed 1 --out data/
    python scripts/make_synthetic_data.py --model random --nodes 8 --rows 200 --seed 3 --out data/
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from admg.data import write_frame  # noqa: E402
from admg.graph import render_graph  # noqa: E402
from admg.rng import make_stream  # noqa: E402
from admg.synthetic import (  # noqa: E402
    bow_model,
    industrialization_model,
    random_admg,
    random_theta,
    recovery_model,
    simulate,
)

MODELS = {
    "industrialization": industrialization_model,
    "recovery": recovery_model,
    "bow": bow_model,
}


def main() -> int:
    parser = argparse.ArgumentParser(description="Simulate data from a Gaussian ADMG model")
    parser.add_argument("--model", choices=sorted(MODELS) + ["random"], default="industrialization")
    parser.add_argument("--nodes", type=int, default=6, help="Node count for --model random")
    parser.add_argument("--rows", type=int, default=75)
    parser.add_argument("--test-rows", type=int, default=0, help="Also write a held-out file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="data")
    args = parser.parse_args()

    if args.model == "random":
        graph = random_admg(args.nodes, make_stream(args.seed, 0))
        theta = random_theta(graph, make_stream(args.seed, 1))
    else:
        graph, theta = MODELS[args.model]()

    os.makedirs(args.out, exist_ok=True)
    graph_path = os.path.join(args.out, f"{args.model}.txt")
    with open(graph_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_graph(graph))
    print(f"[OK] graph -> {graph_path}")

    data = simulate(graph, theta, args.rows, make_stream(args.seed, 2))
    data_path = os.path.join(args.out, f"{args.model}_train.csv")
    write_frame(data.to_frame(), data_path)
    print(f"[OK] {data.d} rows -> {data_path}")

    if args.test_rows:
        test = simulate(graph, theta, args.test_rows, make_stream(args.seed, 3))
        test_path = os.path.join(args.out, f"{args.model}_test.csv")
        write_frame(test.to_frame(), test_path)
        print(f"[OK] {test.d} rows -> {test_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
