"""Self-play training: state encoding, prior-guided search, episodes, gated iteration.

The guided search is a PUCT tree: children are selected by
Q(s,a) + c_puct * p(a) * sqrt(N(s)) / (1 + n(s,a)), leaves are evaluated by the
network's value head (terminal leaves by the true outcome), and the move
distribution comes from root visit counts under a temperature. Boards up to
12x12 are encoded onto a padded 12x12x3 tensor so one network plays them all.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import neural
from .agents import Agent, NoLegalMoveError
from .game import Board, BoardTooLargeError, GameConfig, Mark, Outcome
from .neural import Adam, Network, load_checkpoint, masked_log_softmax, save_checkpoint

logger = logging.getLogger(__name__)

ENCODED_SIDE = neural.BOARD_SIDE
PLANES = neural.PLANES
POLICY_SIZE = neural.POLICY_SIZE


def encode_state(board: Board, mark: Mark) -> np.ndarray:
    """Encode a position for `mark` as a 12x12x3 tensor, board anchored top-left.

    Plane 0 holds `mark`'s tokens, plane 1 the opponent's, plane 2 is 1 on
    real-board cells and 0 on padding.
    """
    rows, cols = board.config.rows, board.config.cols
    if rows > ENCODED_SIDE or cols > ENCODED_SIDE:
        raise BoardTooLargeError(f"{rows}x{cols} exceeds the {ENCODED_SIDE}x{ENCODED_SIDE} encoder")
    planes = np.zeros((ENCODED_SIDE, ENCODED_SIDE, PLANES), dtype=np.float64)
    grid = board.grid
    planes[:rows, :cols, 0] = grid == int(mark)
    planes[:rows, :cols, 1] = grid == int(mark.opponent)
    planes[:rows, :cols, 2] = 1.0
    return planes


@dataclass
class TrainExample:
    """One self-play sample: encoded state, search distribution, final reward.

    `z` is from the perspective of the player to move at the recorded state
    (+1 ultimately won, -1 lost, 0 draw); it is None until the game finishes.
    """

    state: np.ndarray
    pi: np.ndarray
    z: float | None = None
    to_move: Mark = Mark.P1


@dataclass(frozen=True)
class TrainConfig:
    num_iters: int = 30
    num_episodes: int = 50
    num_sims: int = 100
    gating_threshold: float = 0.6
    gating_games: int = 40
    replay_capacity: int = 20          # iterations of examples kept
    temperature_plies: int = 8         # tau = 1 for this many plies, then argmax
    c_puct: float = 1.5
    batch_size: int = 64
    epochs: int = 5
    lr: float = 1e-3
    l2: float = 1e-4
    dirichlet_alpha: float = 1.0
    dirichlet_weight: float = 0.25
    precision: str = "f32"             # "f32" or "f64"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.5 < self.gating_threshold <= 1.0:
            raise ValueError("gating threshold must be in (0.5, 1]")
        if self.gating_games < 2 or self.gating_games % 2:
            raise ValueError("gating games must be even and >= 2")
        for name in ("num_iters", "num_episodes", "num_sims", "replay_capacity",
                     "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.precision not in ("f32", "f64"):
            raise ValueError("precision must be 'f32' or 'f64'")

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64


class _PuctNode:
    __slots__ = ("board", "terminal", "prior", "n", "w", "children")

    def __init__(self, board: Board, terminal: Outcome | None, prior: float):
        self.board = board
        self.terminal = terminal
        self.prior = prior
        self.n = 0
        self.w = 0.0  # accumulated value from the parent mover's perspective
        self.children: dict[int, _PuctNode] | None = None


def _expand_node(node: _PuctNode, network: Network) -> float:
    """Create children with network priors; returns the leaf value for the node's mover."""
    board = node.board
    legal = board.legal_moves()
    logits, value = network.forward(encode_state(board, board.to_move)[None])
    mask = np.zeros((1, POLICY_SIZE), dtype=bool)
    mask[0, legal] = True
    priors = np.exp(masked_log_softmax(logits.astype(np.float64), mask))[0]
    children = {}
    for col in legal:
        child_board = board.apply(col)
        outcome = child_board.outcome(col)
        children[col] = _PuctNode(child_board,
                                  outcome if outcome.is_terminal else None,
                                  float(priors[col]))
    node.children = children
    return float(value[0, 0])


def _terminal_value(outcome: Outcome, to_move: Mark) -> float:
    """Game result from the perspective of `to_move` at the terminal node."""
    if outcome.is_draw:
        return 0.0
    return 1.0 if outcome.winner == to_move else -1.0


def guided_search(board: Board, mark: Mark, network: Network, num_sims: int,
                  c_puct: float = 1.5, rng: np.random.Generator | None = None,
                  tau: float = 1.0, dirichlet_alpha: float | None = None,
                  dirichlet_weight: float = 0.25,
                  deadline: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run `num_sims` network-guided simulations; returns (pi over 12 columns, root visit counts).

    pi is proportional to visit counts^(1/tau) and zero on illegal columns;
    tau <= 0.01 is treated as an argmax (ties broken at random under `rng`).
    Root priors get Dirichlet noise when `dirichlet_alpha` is set. The root is
    expanded before counting simulations, so each simulation descends at least
    one edge and root child visits sum to the number of simulations run.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if board.to_move != mark:
        raise ValueError("guided search must be called for the side to move")
    legal = board.legal_moves()
    if not legal:
        raise NoLegalMoveError("guided search on a full board")
    end_time = None if deadline is None else time.monotonic() + deadline

    root = _PuctNode(board, None, 1.0)
    _expand_node(root, network)
    if dirichlet_alpha is not None and len(legal) > 1:
        noise = rng.dirichlet([dirichlet_alpha] * len(legal))
        for col, eta in zip(legal, noise):
            child = root.children[col]
            child.prior = (1 - dirichlet_weight) * child.prior + dirichlet_weight * float(eta)

    sims_done = 0
    for _ in range(num_sims):
        if end_time is not None and time.monotonic() >= end_time and sims_done > 0:
            break
        node = root
        path: list[_PuctNode] = [root]
        # descend until an unexpanded or terminal node
        while node.children is not None and node.terminal is None:
            sqrt_n = math.sqrt(node.n) if node.n > 0 else 1.0
            best_score = -np.inf
            best_child = None
            for child in node.children.values():
                q = child.w / child.n if child.n else 0.0
                score = q + c_puct * child.prior * sqrt_n / (1 + child.n)
                if score > best_score:
                    best_score = score
                    best_child = child
            node = best_child
            path.append(node)
        if node.terminal is not None:
            value = _terminal_value(node.terminal, node.board.to_move)
        else:
            value = _expand_node(node, network)
        # back up: `value` is from the leaf mover's perspective; each edge on the
        # path stores value from its parent's perspective, one sign flip per ply
        for edge_node in reversed(path[1:]):
            value = -value
            edge_node.n += 1
            edge_node.w += value
        root.n += 1
        sims_done += 1

    counts = np.zeros(POLICY_SIZE, dtype=np.float64)
    for col, child in root.children.items():
        counts[col] = child.n
    pi = np.zeros(POLICY_SIZE, dtype=np.float64)
    if tau <= 0.01:
        top = counts.max()
        ties = np.flatnonzero(counts == top)
        ties = [c for c in ties if c in root.children]
        pick = int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])
        pi[pick] = 1.0
    elif counts.sum() > 0:
        weighted = counts ** (1.0 / tau)
        pi = weighted / weighted.sum()
    else:  # zero simulations completed (deadline too tight): fall back to priors
        for col, child in root.children.items():
            pi[col] = child.prior
        pi /= pi.sum()
    return pi, counts


def sample_move(pi: np.ndarray, board: Board, rng: np.random.Generator) -> int:
    """Draw a column from pi, asserting the draw is legal before returning it."""
    col = int(rng.choice(POLICY_SIZE, p=pi))
    legal = board.legal_moves()
    assert col in legal, f"sampled illegal column {col} (legal: {legal})"
    return col


def execute_episode(network: Network, game_config: GameConfig, config: TrainConfig,
                    rng: np.random.Generator) -> list[TrainExample]:
    """Play one self-play game; returns its examples with rewards filled in."""
    board = Board.empty(game_config)
    examples: list[TrainExample] = []
    ply = 0
    while True:
        tau = 1.0 if ply < config.temperature_plies else 0.0
        pi, _ = guided_search(board, board.to_move, network, config.num_sims,
                              c_puct=config.c_puct, rng=rng, tau=tau,
                              dirichlet_alpha=config.dirichlet_alpha,
                              dirichlet_weight=config.dirichlet_weight)
        examples.append(TrainExample(
            state=encode_state(board, board.to_move), pi=pi, to_move=board.to_move))
        col = sample_move(pi, board, rng)
        board = board.apply(col)
        ply += 1
        outcome = board.outcome(col)
        if outcome.is_terminal:
            for example in examples:
                if outcome.is_draw:
                    example.z = 0.0
                else:
                    example.z = 1.0 if outcome.winner == example.to_move else -1.0
            return examples


class AlphaZeroAgent(Agent):
    """Plays the argmax of the guided-search distribution (no exploration noise)."""

    def __init__(self, network: Network, num_sims: int = 100, c_puct: float = 1.5,
                 seed: int = 0, name: str = "alphazero"):
        self.network = network
        self.num_sims = num_sims
        self.c_puct = c_puct
        self._rng = np.random.default_rng(seed)
        self.name = name

    @classmethod
    def from_checkpoint(cls, path, **kwargs) -> "AlphaZeroAgent":
        network, _, _ = load_checkpoint(path)
        return cls(network, **kwargs)

    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        legal = self._require_turn(board, mark)
        if len(legal) == 1:
            return legal[0]
        budget = None if deadline is None else deadline * 0.9
        pi, _ = guided_search(board, mark, self.network, self.num_sims,
                              c_puct=self.c_puct, rng=self._rng, tau=0.0,
                              deadline=budget)
        return int(np.argmax(pi))


def play_guided_game(net_p1: Network, net_p2: Network, game_config: GameConfig,
                     num_sims: int, c_puct: float, rng: np.random.Generator) -> Outcome:
    """One evaluation game between two networks at tau -> 0, no noise."""
    board = Board.empty(game_config)
    nets = {Mark.P1: net_p1, Mark.P2: net_p2}
    while True:
        pi, _ = guided_search(board, board.to_move, nets[board.to_move], num_sims,
                              c_puct=c_puct, rng=rng, tau=0.0)
        col = int(np.argmax(pi))
        board = board.apply(col)
        outcome = board.outcome(col)
        if outcome.is_terminal:
            return outcome


def gate_decision(wins_new: int, wins_old: int, threshold: float) -> tuple[bool, float]:
    """Promotion rule: the new side's share of decided games must reach the threshold.

    Zero decided games is no evidence, so the candidate is rejected.
    """
    decided = wins_new + wins_old
    fraction = wins_new / decided if decided else 0.0
    return decided > 0 and fraction >= threshold, fraction


def gate(new_network: Network, old_network: Network, games: int, config: TrainConfig,
         game_config: GameConfig, rng: np.random.Generator) -> tuple[bool, float, dict]:
    """Decide promotion by playing evaluation games (colors alternate: half the
    games give the new network the first move)."""
    if games < 2 or games % 2:
        raise ValueError("gating needs an even number of games >= 2")
    wins_new = wins_old = draws = 0
    for g in range(games):
        new_is_p1 = g % 2 == 0
        p1 = new_network if new_is_p1 else old_network
        p2 = old_network if new_is_p1 else new_network
        outcome = play_guided_game(p1, p2, game_config, config.num_sims,
                                   config.c_puct, rng)
        if outcome.is_draw:
            draws += 1
        elif (outcome.winner == Mark.P1) == new_is_p1:
            wins_new += 1
        else:
            wins_old += 1
    promote, fraction = gate_decision(wins_new, wins_old, config.gating_threshold)
    stats = {"wins_new": wins_new, "wins_old": wins_old, "draws": draws,
             "decided": wins_new + wins_old, "fraction": fraction,
             "threshold": config.gating_threshold}
    return promote, fraction, stats


def train_network(network: Network, examples: list[TrainExample], config: TrainConfig,
                  rng: np.random.Generator) -> tuple[Network, list[float]]:
    """Train a candidate copy of `network` on the replay examples; returns (candidate, epoch losses)."""
    candidate = Network(dtype=config.dtype, seed=config.seed)
    candidate.set_params(network.params())
    adam = Adam(candidate.params(), lr=config.lr)

    states = np.stack([e.state for e in examples]).astype(config.dtype)
    pis = np.stack([e.pi for e in examples])
    zs = np.array([e.z for e in examples], dtype=config.dtype).reshape(-1, 1)
    masks = pis > 0
    n = len(examples)

    epoch_losses: list[float] = []
    weight_indices = [i for i, name in enumerate(Network.PARAM_NAMES) if name.endswith("_w")]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, values = candidate.forward(states[idx])
            total, dlogits, dvalues = neural.loss_and_grads(
                logits, values, pis[idx], zs[idx], masks[idx])
            grads = candidate.backward(dlogits, dvalues)
            if config.l2 > 0:
                params = candidate.params()
                for i in weight_indices:
                    total += config.l2 * float(np.sum(params[i].astype(np.float64) ** 2))
                    grads[i] = grads[i] + 2.0 * config.l2 * params[i]
            if not np.isfinite(total):
                raise FloatingPointError(f"training loss diverged (loss={total})")
            adam.step(candidate.params(), grads)
            batch_losses.append(total)
        epoch_losses.append(float(np.mean(batch_losses)))
    return candidate, epoch_losses


def policy_iteration(game_config: GameConfig, config: TrainConfig, out_dir,
                     progress: bool = False) -> tuple[Path, list[dict]]:
    """Run gated self-play training; returns (best checkpoint path, per-iteration log).

    Each iteration: generate episodes with the incumbent network, train a
    candidate on the replay buffer, gate it, and checkpoint. The replay buffer
    keeps the most recent `replay_capacity` iterations of examples. Training
    aborts cleanly on a non-finite loss, preserving the last good checkpoint.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "training_log.jsonl"
    best_path = out_dir / "best.ckpt"

    rng = np.random.default_rng(config.seed)
    network = Network(dtype=config.dtype, seed=config.seed)
    buffer: list[list[TrainExample]] = []
    records: list[dict] = []
    lineage = "init"
    save_checkpoint(best_path, network, metadata={"iteration": 0, "lineage": lineage})

    with open(log_path, "w") as log_file:
        for iteration in range(1, config.num_iters + 1):
            started = time.monotonic()
            iter_examples: list[TrainExample] = []
            for _ in range(config.num_episodes):
                iter_examples.extend(execute_episode(network, game_config, config, rng))
            buffer.append(iter_examples)
            if len(buffer) > config.replay_capacity:
                buffer.pop(0)
            flat = [e for chunk in buffer for e in chunk]

            try:
                candidate, losses = train_network(network, flat, config, rng)
            except FloatingPointError as exc:
                record = {"iteration": iteration, "error": str(exc),
                          "aborted": True, "buffer_size": len(flat)}
                records.append(record)
                log_file.write(json.dumps(record) + "\n")
                logger.error("iteration %d aborted: %s", iteration, exc)
                break

            promoted, fraction, stats = gate(candidate, network, config.gating_games,
                                             config, game_config, rng)
            if promoted:
                network = candidate
                lineage = f"iter{iteration}"

            ckpt_path = out_dir / f"iter_{iteration:03d}.ckpt"
            metadata = {"iteration": iteration, "promoted": promoted, "lineage": lineage,
                        "gating": stats}
            save_checkpoint(ckpt_path, network, metadata=metadata)
            save_checkpoint(best_path, network, metadata=metadata)

            record = {
                "iteration": iteration,
                "episodes": config.num_episodes,
                "new_examples": len(iter_examples),
                "buffer_size": len(flat),
                "loss_first_epoch": losses[0],
                "loss_last_epoch": losses[-1],
                "gating": stats,
                "promoted": promoted,
                "wall_seconds": round(time.monotonic() - started, 3),
            }
            records.append(record)
            log_file.write(json.dumps(record) + "\n")
            log_file.flush()
            if progress:
                print(f"iter {iteration}/{config.num_iters}: loss "
                      f"{losses[0]:.3f}->{losses[-1]:.3f} "
                      f"gate {stats['wins_new']}-{stats['wins_old']}-{stats['draws']} "
                      f"promoted={promoted}")
            logger.info("iteration %d: promoted=%s fraction=%.2f", iteration,
                        promoted, fraction)
    return best_path, records
