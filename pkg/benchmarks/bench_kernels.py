"""Benchmark the hot kernels under numba against the pure NumPy/Python fallback.

The backend is chosen at import time from the CONNECTX_NUMBA environment
variable, so this script re-runs itself in a subprocess per backend and prints
a comparison table:

    python3 benchmarks/bench_kernels.py [--seconds 2.0]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _time_workload(fn, min_seconds: float) -> float:
    """Calls per second of `fn`, measured over at least `min_seconds`."""
    fn()  # warm (and compile, on the numba path)
    count = 0
    started = time.perf_counter()
    while time.perf_counter() - started < min_seconds:
        fn()
        count += 1
    return count / (time.perf_counter() - started)


def run_worker(min_seconds: float) -> dict:
    import numpy as np

    from connectx_lab import kernels
    from connectx_lab.game import Board, GameConfig
    from connectx_lab.mcts import hybrid_params, plain_params, run_search

    config = GameConfig(6, 7, 4)
    board = Board.empty(config)
    grid = board.grid_copy()
    # a mid-game position for the heuristic / search workloads
    mid = Board.from_moves(config, [3, 3, 4, 2, 2, 4, 5, 1])
    mid_grid = mid.grid_copy()
    term = kernels.terminal_score(6, 7, 4, 1000.0)
    rng = np.random.default_rng(0)

    results = {"backend": "numba" if kernels.NUMBA_ENABLED else "numpy"}

    seeds = iter(rng.integers(2 ** 62, size=10_000_000).tolist())
    results["random_playout"] = _time_workload(
        lambda: kernels.random_playout(grid.copy(), 1, 4, next(seeds)), min_seconds)
    results["count_runs"] = _time_workload(
        lambda: kernels.count_runs(mid_grid, 1, 4), min_seconds)
    results["alphabeta_depth5"] = _time_workload(
        lambda: kernels.best_move_alphabeta(mid_grid, 1, 4, 5, 1000.0, 2000.0, term),
        min_seconds)
    results["minimax2_playout"] = _time_workload(
        lambda: kernels.minimax_playout(grid.copy(), 1, 4, 2, 1000.0, 2000.0, term),
        min_seconds)

    def mcts(params):
        def go():
            run_search(board, params)
        return go

    results["mcts_plain_400iters"] = _time_workload(
        mcts(plain_params(iters=400, seed=1)), min_seconds)
    results["mcts_hybrid_20iters"] = _time_workload(
        mcts(hybrid_params(iters=20, seed=1)), min_seconds)
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=2.0,
                        help="minimum measurement time per workload")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.seconds)))
        return 0

    rows = {}
    for backend in ("1", "0"):
        env = dict(os.environ, CONNECTX_NUMBA=backend)
        proc = subprocess.run([sys.executable, __file__, "--worker",
                               "--seconds", str(args.seconds)],
                              env=env, capture_output=True, text=True, check=True)
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        rows[data.pop("backend")] = data

    numba = rows["numba"]
    numpy_ = rows["numpy"]
    name_width = max(len(k) for k in numba) + 2
    print(f"{'workload'.ljust(name_width)}{'numba/s':>14}{'numpy/s':>14}{'speedup':>10}")
    for key in numba:
        ratio = numba[key] / numpy_[key] if numpy_[key] else float("inf")
        print(f"{key.ljust(name_width)}{numba[key]:>14.1f}{numpy_[key]:>14.1f}"
              f"{ratio:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
