"""Monte Carlo tree search with UCB selection, plus the minimax-rollout variant.

One search = repeated select / expand / simulate / backpropagate rounds on a
fresh tree. Draws back up as half a win. The plain variant plays uniform
random rollouts with exploration constant sqrt(2); the hybrid variant guides
every rollout move with a shallow alpha-beta search and uses 1/sqrt(2),
trading simulation count for simulation quality.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .agents import Agent
from .game import Board, DRAW, Mark, Outcome
from .minimax import HeuristicParams, terminal_score


@dataclass(frozen=True)
class RandomRollout:
    """Uniform random playout to the end of the game."""


@dataclass(frozen=True)
class MinimaxRollout:
    """Playout in which every move is chosen by a depth-limited alpha-beta search."""

    depth: int = 2
    params: HeuristicParams = field(default_factory=HeuristicParams)


@dataclass(frozen=True)
class SearchParams:
    """Search budget and exploration settings.

    The budget is `iters` iterations, `max_seconds` of wall clock, or both;
    the search stops at whichever limit is hit first (at least one must be
    set). A wall-clock budget is overrun by at most one simulation.
    """

    c: float = math.sqrt(2.0)
    iters: int | None = 20_000
    max_seconds: float | None = None
    rollout: RandomRollout | MinimaxRollout = field(default_factory=RandomRollout)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValueError("exploration constant must be >= 0")
        if self.iters is None and self.max_seconds is None:
            raise ValueError("need an iteration or wall-clock budget")
        if self.iters is not None and self.iters < 1:
            raise ValueError("iteration budget must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("wall-clock budget must be positive")


def plain_params(**overrides) -> SearchParams:
    """Defaults for the plain variant: c = sqrt(2), 20000 random rollouts."""
    return SearchParams(**overrides)


def hybrid_params(**overrides) -> SearchParams:
    """Defaults for the hybrid variant: c = 1/sqrt(2), 500 depth-2 rollouts."""
    overrides.setdefault("c", 1.0 / math.sqrt(2.0))
    overrides.setdefault("iters", 500)
    overrides.setdefault("rollout", MinimaxRollout())
    return SearchParams(**overrides)


def ucb(w: float, n: int, parent_n: int, c: float) -> float:
    """Upper confidence bound: w/n + c * sqrt(ln(parent_n) / n). Requires n, parent_n >= 1."""
    return w / n + c * math.sqrt(math.log(parent_n) / n)


class MctsNode:
    """One tree node; `w`/`n` are the win/visit statistics of the move that created it.

    `w` counts backed-up outcomes favorable to `player_just_moved` (draws count
    0.5), so a parent selecting among children by UCB maximizes its own payoff.
    Each node caches its position so selection never re-applies moves.
    """

    __slots__ = ("w", "n", "children", "untried", "player_just_moved", "terminal", "board")

    def __init__(self, board: Board, player_just_moved: Mark, untried: list[int],
                 terminal: Outcome | None = None):
        self.w = 0.0
        self.n = 0
        self.children: dict[int, MctsNode] = {}
        self.untried = untried
        self.player_just_moved = player_just_moved
        self.terminal = terminal
        self.board = board

    def __repr__(self) -> str:
        return (f"MctsNode(w={self.w}, n={self.n}, children={sorted(self.children)}, "
                f"untried={self.untried}, just_moved={self.player_just_moved.name})")


def select(root: MctsNode, c: float, rng: np.random.Generator) -> list[MctsNode]:
    """Descend by argmax UCB until a node with untried moves (or a terminal node).

    Returns the root-to-leaf path. UCB ties break uniformly at random.
    """
    path = [root]
    node = root
    while not node.untried and node.terminal is None and node.children:
        log_parent = math.log(node.n)
        best_cols: list[int] = []
        best_value = -math.inf
        for col, child in node.children.items():
            value = child.w / child.n + c * math.sqrt(log_parent / child.n)
            if value > best_value:
                best_value = value
                best_cols = [col]
            elif value == best_value:
                best_cols.append(col)
        col = best_cols[0] if len(best_cols) == 1 else best_cols[int(rng.integers(len(best_cols)))]
        node = node.children[col]
        path.append(node)
    return path


def expand(node: MctsNode, rng: np.random.Generator) -> MctsNode:
    """Create a child for one untried column, chosen uniformly at random."""
    idx = int(rng.integers(len(node.untried))) if len(node.untried) > 1 else 0
    col = node.untried.pop(idx)
    board = node.board
    grid = board.grid_copy()
    mover = board.to_move
    code = int(kernels.drop_and_check(grid, col, int(mover), board.config.inarow))
    child_board = Board._trusted(board.config, grid, mover.opponent)
    if code == 1:
        outcome = Outcome.win(mover)
    elif code == 2:
        outcome = DRAW
    else:
        outcome = None
    child = MctsNode(
        board=child_board,
        player_just_moved=mover,
        untried=child_board.legal_moves() if outcome is None else [],
        terminal=outcome,
    )
    node.children[col] = child
    return child


def simulate(board: Board, rollout: RandomRollout | MinimaxRollout,
             rng: np.random.Generator) -> Outcome:
    """Play `board` to the end under the rollout policy and return the outcome.

    A terminal board is returned as-is. Random rollouts are driven by a seed
    drawn from `rng`; minimax rollouts are deterministic in the board.
    """
    outcome = board.outcome()
    if outcome.is_terminal:
        return outcome
    if isinstance(rollout, RandomRollout):
        seed = int(rng.integers(2 ** 63))
        winner = int(kernels.random_playout(
            board.grid_copy(), int(board.to_move), board.config.inarow, seed))
    else:
        params = rollout.params
        term = terminal_score(board.config, params)
        winner = int(kernels.minimax_playout(
            board.grid_copy(), int(board.to_move), board.config.inarow,
            rollout.depth, params.own_base, params.opp_base, term))
    return Outcome.win(Mark(winner)) if winner else DRAW


def backpropagate(path: list[MctsNode], outcome: Outcome) -> None:
    """Add one visit along the path; wins credit the node's mover, draws half."""
    for node in path:
        node.n += 1
        if outcome.is_win:
            if outcome.winner == node.player_just_moved:
                node.w += 1.0
        else:
            node.w += 0.5


def run_search(board: Board, params: SearchParams, deadline: float | None = None,
               rng: np.random.Generator | None = None) -> tuple[MctsNode, int]:
    """Run budgeted MCTS from `board`; returns the root and completed iterations."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    root = MctsNode(board=board, player_just_moved=board.to_move.opponent,
                    untried=board.legal_moves())
    budget = params.max_seconds
    if deadline is not None:
        budget = deadline if budget is None else min(budget, deadline)
    end_time = None if budget is None else time.monotonic() + budget
    iterations = 0
    while params.iters is None or iterations < params.iters:
        if end_time is not None and time.monotonic() >= end_time:
            break
        path = select(root, params.c, rng)
        node = path[-1]
        if node.terminal is not None:
            outcome = node.terminal
        else:
            child = expand(node, rng)
            path.append(child)
            outcome = child.terminal if child.terminal is not None else simulate(
                child.board, params.rollout, rng)
        backpropagate(path, outcome)
        iterations += 1
    return root, iterations


class MctsAgent(Agent):
    """Tree-search player; the move played is the most-visited root child."""

    # fraction of the move deadline reserved for returning the result
    _SAFETY = 0.05

    def __init__(self, params: SearchParams | None = None, name: str | None = None):
        self.params = params or plain_params()
        self._rng = np.random.default_rng(self.params.seed)
        if name is None:
            kind = "hybrid" if isinstance(self.params.rollout, MinimaxRollout) else "mcts"
            name = f"{kind}(iters={self.params.iters})"
        self.name = name

    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        legal = self._require_turn(board, mark)
        if len(legal) == 1:
            return legal[0]
        move_budget = None
        if deadline is not None:
            move_budget = deadline * (1.0 - self._SAFETY)
        root, _ = run_search(board, self.params, move_budget, self._rng)
        if not root.children:
            return legal[0]
        # robust child: max visit count, ties toward the lowest column
        return min(root.children, key=lambda col: (-root.children[col].n, col))
