"""Hot numeric kernels shared by the search agents.

Every function here operates on a raw ``int8`` grid (``rows x cols``, row 0 at
the top, cells 0 = empty, 1 = first player, 2 = second player) so the whole
module can be compiled with numba. Compilation is controlled by the
``CONNECTX_NUMBA`` environment variable: set it to ``0`` to force the pure
NumPy/Python fallback (the same source, uncompiled). The fallback is also
selected automatically when numba is not installed.

``benchmarks/bench_kernels.py`` compares both paths.

Playouts use an internal splitmix64 generator so that a seed produces the
identical move sequence under both paths; numpy Generator objects cannot cross
the nopython boundary.
"""

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("CONNECTX_NUMBA", "1") != "0"

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def maybe_jit(fn):
        return njit(cache=True, nogil=True)(fn)
else:
    def maybe_jit(fn):
        return fn


_U64_MASK = 0xFFFFFFFFFFFFFFFF

if NUMBA_ENABLED:
    @maybe_jit
    def _next_u64(state):
        # splitmix64 step: uint64 arithmetic wraps natively under numba
        state = state + np.uint64(0x9E3779B97F4A7C15)
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return state, z ^ (z >> np.uint64(31))
else:
    def _next_u64(state):
        # same splitmix64 step on masked Python ints (no numpy overflow warnings)
        state = (int(state) + 0x9E3779B97F4A7C15) & _U64_MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
        return state, z ^ (z >> 31)


@maybe_jit
def lowest_empty_row(grid, col):
    """Row index where a token dropped in `col` lands, or -1 if the column is full."""
    for r in range(grid.shape[0] - 1, -1, -1):
        if grid[r, col] == 0:
            return r
    return -1


@maybe_jit
def win_at(grid, inarow, row, col):
    """True if the token at (row, col) completes a run of >= inarow."""
    mark = grid[row, col]
    if mark == 0:
        return False
    rows, cols = grid.shape
    # direction pairs: horizontal, vertical, down-right diag, up-right diag
    for k in range(4):
        if k == 0:
            dr, dc = 0, 1
        elif k == 1:
            dr, dc = 1, 0
        elif k == 2:
            dr, dc = 1, 1
        else:
            dr, dc = -1, 1
        count = 1
        r, c = row + dr, col + dc
        while 0 <= r < rows and 0 <= c < cols and grid[r, c] == mark:
            count += 1
            r += dr
            c += dc
        r, c = row - dr, col - dc
        while 0 <= r < rows and 0 <= c < cols and grid[r, c] == mark:
            count += 1
            r -= dr
            c -= dc
        if count >= inarow:
            return True
    return False


@maybe_jit
def scan_winner(grid, inarow):
    """Full-board scan: 1 or 2 if that player has a run of >= inarow, else 0."""
    rows, cols = grid.shape
    for r in range(rows):
        for c in range(cols):
            mark = grid[r, c]
            if mark == 0:
                continue
            # check runs starting at (r, c) in the four forward directions
            for k in range(4):
                if k == 0:
                    dr, dc = 0, 1
                elif k == 1:
                    dr, dc = 1, 0
                elif k == 2:
                    dr, dc = 1, 1
                else:
                    dr, dc = -1, 1
                rr = r + dr * (inarow - 1)
                cc = c + dc * (inarow - 1)
                if rr < 0 or rr >= rows or cc < 0 or cc >= cols:
                    continue
                ok = True
                for step in range(1, inarow):
                    if grid[r + dr * step, c + dc * step] != mark:
                        ok = False
                        break
                if ok:
                    return mark
    return 0


@maybe_jit
def board_is_full(grid):
    cols = grid.shape[1]
    for c in range(cols):
        if grid[0, c] == 0:
            return False
    return True


@maybe_jit
def count_runs(grid, mark, inarow):
    """Counts of maximal same-mark runs per length bucket.

    Returns an int64 array of size inarow+1 where index i (2 <= i <= inarow)
    counts maximal runs of exactly i consecutive mark-tokens along any row,
    column, or diagonal; runs longer than inarow land in the inarow bucket.
    Runs of length 1 are ignored.
    """
    rows, cols = grid.shape
    out = np.zeros(inarow + 1, np.int64)
    # horizontal
    for r in range(rows):
        run = 0
        for c in range(cols):
            if grid[r, c] == mark:
                run += 1
            else:
                if run >= 2:
                    out[min(run, inarow)] += 1
                run = 0
        if run >= 2:
            out[min(run, inarow)] += 1
    # vertical
    for c in range(cols):
        run = 0
        for r in range(rows):
            if grid[r, c] == mark:
                run += 1
            else:
                if run >= 2:
                    out[min(run, inarow)] += 1
                run = 0
        if run >= 2:
            out[min(run, inarow)] += 1
    # down-right diagonals, starting from the left column and the top row
    for start in range(rows + cols - 1):
        if start < rows:
            r, c = start, 0
        else:
            r, c = 0, start - rows + 1
        run = 0
        while r < rows and c < cols:
            if grid[r, c] == mark:
                run += 1
            else:
                if run >= 2:
                    out[min(run, inarow)] += 1
                run = 0
            r += 1
            c += 1
        if run >= 2:
            out[min(run, inarow)] += 1
    # up-right diagonals, starting from the left column and the bottom row
    for start in range(rows + cols - 1):
        if start < rows:
            r, c = start, 0
        else:
            r, c = rows - 1, start - rows + 1
        run = 0
        while r >= 0 and c < cols:
            if grid[r, c] == mark:
                run += 1
            else:
                if run >= 2:
                    out[min(run, inarow)] += 1
                run = 0
            r -= 1
            c += 1
        if run >= 2:
            out[min(run, inarow)] += 1
    return out


@maybe_jit
def heuristic_value(grid, mark, inarow, own_base, opp_base):
    """Run-count evaluation: sum own_base^(i-1) per own i-run minus opp_base^(i-1) per opponent i-run."""
    own = count_runs(grid, mark, inarow)
    opp = count_runs(grid, 3 - mark, inarow)
    total = 0.0
    for i in range(2, inarow + 1):
        total += own[i] * own_base ** (i - 1)
        total -= opp[i] * opp_base ** (i - 1)
    return total


@maybe_jit
def terminal_score(rows, cols, inarow, own_base):
    """Base magnitude for won/lost positions; exceeds any achievable heuristic value."""
    return 10.0 * own_base ** (inarow - 1) * rows * cols


@maybe_jit
def alphabeta_value(grid, to_move, mark, inarow, depth, alpha, beta, own_base, opp_base, term):
    """Fail-soft alpha-beta value of a non-terminal position, from `mark`'s perspective.

    Wins found while expanding score +/- term * depth so that faster wins (and
    slower losses) are preferred; terminal draws score their raw heuristic.
    The caller guarantees the position itself is not terminal.
    """
    if depth <= 0:
        return heuristic_value(grid, mark, inarow, own_base, opp_base)
    cols = grid.shape[1]
    if to_move == mark:
        value = -np.inf
        for col in range(cols):
            r = lowest_empty_row(grid, col)
            if r < 0:
                continue
            grid[r, col] = to_move
            if win_at(grid, inarow, r, col):
                v = term * depth
            elif board_is_full(grid):
                v = heuristic_value(grid, mark, inarow, own_base, opp_base)
            else:
                v = alphabeta_value(grid, 3 - to_move, mark, inarow, depth - 1,
                                    alpha, beta, own_base, opp_base, term)
            grid[r, col] = 0
            if v > value:
                value = v
            if value >= beta:
                break
            if value > alpha:
                alpha = value
        return value
    else:
        value = np.inf
        for col in range(cols):
            r = lowest_empty_row(grid, col)
            if r < 0:
                continue
            grid[r, col] = to_move
            if win_at(grid, inarow, r, col):
                v = -term * depth
            elif board_is_full(grid):
                v = heuristic_value(grid, mark, inarow, own_base, opp_base)
            else:
                v = alphabeta_value(grid, 3 - to_move, mark, inarow, depth - 1,
                                    alpha, beta, own_base, opp_base, term)
            grid[r, col] = 0
            if v < value:
                value = v
            if value <= alpha:
                break
            if value < beta:
                beta = value
        return value


@maybe_jit
def best_move_alphabeta(grid, to_move, inarow, depth, own_base, opp_base, term):
    """Column whose child maximizes the depth-limited alpha-beta value for the mover.

    Each child gets a fresh full window so ties are exact; ties break toward
    the lowest column. Returns -1 when no column is playable.
    """
    cols = grid.shape[1]
    best_col = -1
    best_v = -np.inf
    for col in range(cols):
        r = lowest_empty_row(grid, col)
        if r < 0:
            continue
        grid[r, col] = to_move
        if win_at(grid, inarow, r, col):
            v = term * depth
        elif board_is_full(grid):
            v = heuristic_value(grid, to_move, inarow, own_base, opp_base)
        else:
            v = alphabeta_value(grid, 3 - to_move, to_move, inarow, depth - 1,
                                -np.inf, np.inf, own_base, opp_base, term)
        grid[r, col] = 0
        if v > best_v:
            best_v = v
            best_col = col
    return best_col


@maybe_jit
def drop_and_check(grid, col, to_move, inarow):
    """Drop `to_move` in `col` (mutating `grid`) and classify the result.

    Returns -1 for an illegal drop (grid untouched), 1 if the drop wins,
    2 if it fills the board without winning, 0 otherwise.
    """
    if col < 0 or col >= grid.shape[1]:
        return -1
    r = lowest_empty_row(grid, col)
    if r < 0:
        return -1
    grid[r, col] = to_move
    if win_at(grid, inarow, r, col):
        return 1
    if board_is_full(grid):
        return 2
    return 0


@maybe_jit
def random_playout(grid, to_move, inarow, seed):
    """Play uniform random legal moves on `grid` (mutated) until the game ends.

    Returns the winning mark, or 0 for a draw. The position passed in must not
    already be terminal.
    """
    rows, cols = grid.shape
    next_row = np.empty(cols, np.int64)
    for c in range(cols):
        next_row[c] = lowest_empty_row(grid, c)
    legal = np.empty(cols, np.int64)
    state = np.uint64(seed)
    while True:
        n_legal = 0
        for c in range(cols):
            if next_row[c] >= 0:
                legal[n_legal] = c
                n_legal += 1
        if n_legal == 0:
            return 0
        state, z = _next_u64(state)
        col = legal[np.int64(z % np.uint64(n_legal))]
        r = next_row[col]
        grid[r, col] = to_move
        if win_at(grid, inarow, r, col):
            return to_move
        next_row[col] = r - 1
        to_move = 3 - to_move


@maybe_jit
def minimax_playout(grid, to_move, inarow, depth, own_base, opp_base, term):
    """Play the depth-limited alpha-beta move for each side until the game ends.

    Deterministic given the starting position. Returns the winner or 0 for a
    draw; the position passed in must not already be terminal.
    """
    while True:
        col = best_move_alphabeta(grid, to_move, inarow, depth, own_base, opp_base, term)
        if col < 0:
            return 0
        r = lowest_empty_row(grid, col)
        grid[r, col] = to_move
        if win_at(grid, inarow, r, col):
            return to_move
        if board_is_full(grid):
            return 0
        to_move = 3 - to_move


def warmup():
    """Force compilation of every kernel on a tiny board (no-op in fallback mode)."""
    grid = np.zeros((3, 3), dtype=np.int8)
    lowest_empty_row(grid, 0)
    grid[2, 0] = 1
    win_at(grid, 3, 2, 0)
    scan_winner(grid, 3)
    board_is_full(grid)
    count_runs(grid, 1, 3)
    heuristic_value(grid, 1, 3, 1000.0, 2000.0)
    term = terminal_score(3, 3, 3, 1000.0)
    drop_and_check(grid.copy(), 1, 2, 3)
    alphabeta_value(grid, 2, 1, 3, 2, -np.inf, np.inf, 1000.0, 2000.0, term)
    best_move_alphabeta(grid, 2, 3, 2, 1000.0, 2000.0, term)
    random_playout(grid.copy(), 2, 3, 42)
    minimax_playout(grid.copy(), 2, 3, 2, 1000.0, 2000.0, term)
