import json
import os
import subprocess
import sys
import textwrap

from connectx_lab import kernels
from connectx_lab.game import Board, GameConfig

FINGERPRINT_SCRIPT = textwrap.dedent("""
    import json
    import numpy as np
    from connectx_lab import kernels
    from connectx_lab.game import Board, GameConfig

    board = Board.from_moves(GameConfig(6, 7, 4), [3, 3, 4, 2, 2, 4, 5, 1])
    grid = board.grid_copy()
    term = kernels.terminal_score(6, 7, 4, 1000.0)
    out = {
        "backend": "numba" if kernels.NUMBA_ENABLED else "python",
        "winners": [int(kernels.random_playout(grid.copy(), 1, 4, seed))
                    for seed in range(200)],
        "runs_p1": [int(v) for v in kernels.count_runs(grid, 1, 4)],
        "runs_p2": [int(v) for v in kernels.count_runs(grid, 2, 4)],
        "heuristic": kernels.heuristic_value(grid, 1, 4, 1000.0, 2000.0),
        "alphabeta": kernels.alphabeta_value(grid.copy(), 1, 1, 4, 4,
                                             -np.inf, np.inf, 1000.0, 2000.0, term),
        "best_move": int(kernels.best_move_alphabeta(grid.copy(), 1, 4, 3,
                                                     1000.0, 2000.0, term)),
        "minimax_playout": int(kernels.minimax_playout(grid.copy(), 1, 4, 2,
                                                       1000.0, 2000.0, term)),
    }
    print(json.dumps(out))
""")


def fingerprint_in_subprocess(numba_flag: str) -> dict:
    env = dict(os.environ, CONNECTX_NUMBA=numba_flag)
    proc = subprocess.run([sys.executable, "-c", FINGERPRINT_SCRIPT],
                          env=env, capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


class TestBackendEquivalence:
    def test_fallback_matches_numba_bit_for_bit(self):
        compiled = fingerprint_in_subprocess("1")
        fallback = fingerprint_in_subprocess("0")
        assert compiled["backend"] == "numba"
        assert fallback["backend"] == "python"
        for key in ("winners", "runs_p1", "runs_p2", "heuristic", "alphabeta",
                    "best_move", "minimax_playout"):
            assert compiled[key] == fallback[key], key

    def test_default_backend_is_numba_here(self):
        assert kernels.NUMBA_ENABLED


class TestDropAndCheck:
    def test_codes(self):
        board = Board.from_moves(GameConfig(6, 7, 4), [0, 0, 1, 1, 2, 2])
        grid = board.grid_copy()
        assert kernels.drop_and_check(grid.copy(), -1, 1, 4) == -1
        assert kernels.drop_and_check(grid.copy(), 9, 1, 4) == -1
        winning = grid.copy()
        assert kernels.drop_and_check(winning, 3, 1, 4) == 1
        assert winning[5, 3] == 1
        ongoing = grid.copy()
        assert kernels.drop_and_check(ongoing, 4, 1, 4) == 0

    def test_full_column_illegal(self):
        board = Board.from_moves(GameConfig(6, 7, 4), [2] * 6)
        assert kernels.drop_and_check(board.grid_copy(), 2, 1, 4) == -1

    def test_draw_fill_code(self):
        cfg = GameConfig(1, 2, 2)
        board = Board.from_moves(cfg, [0])
        assert kernels.drop_and_check(board.grid_copy(), 1, 2, 2) == 2


class TestSplitmixDeterminism:
    def test_same_seed_same_playout(self):
        board = Board.empty(GameConfig(6, 7, 4))
        results = {int(kernels.random_playout(board.grid_copy(), 1, 4, 12345))
                   for _ in range(5)}
        assert len(results) == 1

    def test_different_seeds_vary(self):
        board = Board.empty(GameConfig(6, 7, 4))
        winners = [int(kernels.random_playout(board.grid_copy(), 1, 4, seed))
                   for seed in range(60)]
        assert len(set(winners)) > 1
