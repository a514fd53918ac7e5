"""Match play under time control, round-robin cross-play, and Elo-style ratings.

Agents are addressed by spec strings (``name:key=value,...``). A match enforces
a per-move wall-clock limit: an agent that times out, raises, or returns an
illegal column loses immediately with the cause recorded. Completed matches
replay deterministically from their move lists.

The rating system is a standard Elo stand-in (the scheme it mimics is
unpublished): everyone starts at 600 and a draw moves points from the
higher-rated side to the lower-rated side.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .agents import Agent, GreedyAgent, RandomAgent
from .game import Board, GameConfig, Mark
from .mcts import MctsAgent, MinimaxRollout, RandomRollout, SearchParams, hybrid_params
from .minimax import HeuristicParams, MinimaxAgent, MinimaxConfig

RESULT_P1 = "p1"
RESULT_P2 = "p2"
RESULT_DRAW = "draw"

CAUSE_CONNECTED = "connected"
CAUSE_ILLEGAL = "illegal_move"
CAUSE_TIMEOUT = "timeout"
CAUSE_RESIGN = "resign"


class AgentSpecError(ValueError):
    """Malformed spec string, unknown agent name, or unknown parameter key."""


@dataclass(frozen=True)
class AgentSpec:
    """Parsed form of ``name[:key=value,...]``."""

    name: str
    params: dict = field(default_factory=dict)

    def canonical(self) -> str:
        if not self.params:
            return self.name
        body = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}:{body}"


def _rollout_param(value: str):
    if value == "random":
        return RandomRollout()
    if value.startswith("minimax") and value[len("minimax"):].isdigit():
        return MinimaxRollout(depth=int(value[len("minimax"):]))
    raise AgentSpecError(f"rollout must be 'random' or 'minimaxN', got {value!r}")


# name -> {param: (converter, default)}; defaults of None mean "required"
AGENT_SCHEMAS: dict[str, dict] = {
    "random": {},
    "greedy": {},
    "minimax": {
        "depth": (int, 5),
        "own": (float, 1000.0),
        "opp": (float, 2000.0),
    },
    "mcts": {
        "c": (float, math.sqrt(2.0)),
        "iters": (int, 20_000),
        "rollout": (str, "random"),
    },
    "hybrid": {
        "c": (float, 1.0 / math.sqrt(2.0)),
        "iters": (int, 500),
        "rollout": (str, "minimax2"),
    },
    "alphazero": {
        "checkpoint": (str, None),
        "sims": (int, 100),
        "c_puct": (float, 1.5),
    },
}


def parse_agent_spec(text: str) -> AgentSpec:
    """Parse and validate a spec string against the agent registry."""
    text = text.strip()
    name, _, body = text.partition(":")
    if name not in AGENT_SCHEMAS:
        raise AgentSpecError(f"unknown agent {name!r}; known: {sorted(AGENT_SCHEMAS)}")
    schema = AGENT_SCHEMAS[name]
    params = {}
    if body:
        for item in body.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise AgentSpecError(f"expected key=value, got {item!r} in {text!r}")
            if key not in schema:
                raise AgentSpecError(f"unknown parameter {key!r} for agent {name!r} "
                                     f"(known: {sorted(schema)})")
            converter = schema[key][0]
            try:
                params[key] = converter(value)
            except ValueError as exc:
                raise AgentSpecError(f"bad value for {key!r} in {text!r}: {exc}") from exc
    for key, (_, default) in schema.items():
        if key not in params:
            if default is None:
                raise AgentSpecError(f"agent {name!r} requires parameter {key!r}")
            params[key] = default
    return AgentSpec(name, params)


def make_agent(spec: str | AgentSpec | Agent, seed: int = 0) -> Agent:
    """Instantiate an agent from a spec (strings are parsed first).

    Existing Agent instances pass through untouched, which lets tests inject
    stubs into match play.
    """
    if isinstance(spec, Agent):
        return spec
    if isinstance(spec, str):
        spec = parse_agent_spec(spec)
    p = spec.params
    if spec.name == "random":
        return RandomAgent(seed=seed)
    if spec.name == "greedy":
        return GreedyAgent()
    if spec.name == "minimax":
        return MinimaxAgent(MinimaxConfig(
            depth=p["depth"],
            params=HeuristicParams(own_base=p["own"], opp_base=p["opp"])))
    if spec.name == "mcts":
        return MctsAgent(SearchParams(c=p["c"], iters=p["iters"],
                                      rollout=_rollout_param(p["rollout"]), seed=seed))
    if spec.name == "hybrid":
        params = hybrid_params(c=p["c"], iters=p["iters"],
                               rollout=_rollout_param(p["rollout"]), seed=seed)
        return MctsAgent(params, name=f"hybrid(iters={p['iters']})")
    if spec.name == "alphazero":
        from .alphazero import AlphaZeroAgent
        return AlphaZeroAgent.from_checkpoint(p["checkpoint"], num_sims=p["sims"],
                                              c_puct=p["c_puct"], seed=seed)
    raise AgentSpecError(f"unknown agent {spec.name!r}")  # pragma: no cover


def agent_catalog() -> list[dict]:
    """Names, parameter schemas, and defaults for every registered agent."""
    catalog = []
    for name, schema in AGENT_SCHEMAS.items():
        params = {}
        for key, (converter, default) in schema.items():
            params[key] = {"type": converter.__name__, "default": default}
        catalog.append({"name": name, "params": params})
    return catalog


@dataclass
class MatchRecord:
    """Everything needed to audit or replay one match."""

    rows: int
    cols: int
    inarow: int
    p1_spec: str
    p2_spec: str
    moves: list[int]
    result: str           # RESULT_P1 | RESULT_P2 | RESULT_DRAW
    cause: str            # CAUSE_* constant
    think_times: list[float]
    seed: int

    def config(self) -> GameConfig:
        return GameConfig(self.rows, self.cols, self.inarow)

    def to_json(self) -> str:
        return json.dumps({
            "rows": self.rows, "cols": self.cols, "inarow": self.inarow,
            "p1": self.p1_spec, "p2": self.p2_spec, "moves": self.moves,
            "result": self.result, "cause": self.cause,
            "think_times": [round(t, 6) for t in self.think_times],
            "seed": self.seed,
        })

    @classmethod
    def from_json(cls, text: str) -> "MatchRecord":
        d = json.loads(text)
        return cls(d["rows"], d["cols"], d["inarow"], d["p1"], d["p2"], d["moves"],
                   d["result"], d["cause"], d["think_times"], d["seed"])


def _spec_text(spec: str | AgentSpec | Agent) -> str:
    if isinstance(spec, Agent):
        return spec.name
    if isinstance(spec, AgentSpec):
        return spec.canonical()
    return parse_agent_spec(spec).canonical()


def play_match(p1: str | AgentSpec | Agent, p2: str | AgentSpec | Agent,
               config: GameConfig, move_time_limit: float | None = 5.0,
               seed: int = 0) -> MatchRecord:
    """Play one deadline-enforced match; agent failures become recorded losses."""
    agents = {Mark.P1: make_agent(p1, seed=seed), Mark.P2: make_agent(p2, seed=seed + 1)}
    board = Board.empty(config)
    moves: list[int] = []
    think: list[float] = []

    def finish(result: str, cause: str) -> MatchRecord:
        return MatchRecord(config.rows, config.cols, config.inarow,
                           _spec_text(p1), _spec_text(p2), moves, result, cause,
                           think, seed)

    executor = None if move_time_limit is None else ThreadPoolExecutor(max_workers=1)
    try:
        while True:
            mover = board.to_move
            loss_for_mover = RESULT_P2 if mover is Mark.P1 else RESULT_P1
            agent = agents[mover]
            started = perf_counter()
            try:
                if executor is None:
                    col = agent.choose(board, mover, None)
                else:
                    future = executor.submit(agent.choose, board, mover, move_time_limit)
                    col = future.result(timeout=move_time_limit)
            except FutureTimeout:
                think.append(perf_counter() - started)
                return finish(loss_for_mover, CAUSE_TIMEOUT)
            except Exception:
                think.append(perf_counter() - started)
                return finish(loss_for_mover, CAUSE_RESIGN)
            think.append(perf_counter() - started)
            if col is None:
                return finish(loss_for_mover, CAUSE_RESIGN)
            if not isinstance(col, (int, np.integer)) or col not in board.legal_moves():
                return finish(loss_for_mover, CAUSE_ILLEGAL)
            col = int(col)
            board = board.apply(col)
            moves.append(col)
            outcome = board.outcome(col)
            if outcome.is_terminal:
                if outcome.is_draw:
                    return finish(RESULT_DRAW, CAUSE_CONNECTED)
                winner = RESULT_P1 if outcome.winner is Mark.P1 else RESULT_P2
                return finish(winner, CAUSE_CONNECTED)
    finally:
        if executor is not None:
            executor.shutdown(wait=False, cancel_futures=True)


def replay_record(record: MatchRecord) -> str:
    """Re-derive a connected match's result from its move list."""
    board = Board.from_moves(record.config(), record.moves)
    outcome = board.outcome(record.moves[-1] if record.moves else None)
    if not outcome.is_terminal:
        raise ValueError("move list does not reach a terminal position")
    if outcome.is_draw:
        return RESULT_DRAW
    return RESULT_P1 if outcome.winner is Mark.P1 else RESULT_P2


@dataclass
class CrossPlayTable:
    """Pairwise results; cell (i, j) holds (wins of j, wins of i, draws)."""

    specs: list[str]
    games_per_pair: int
    cells: dict[tuple[int, int], list[int]] = field(default_factory=dict)

    def add_result(self, i: int, j: int, result_for_pair: str) -> None:
        """Record one game between row agent i and column agent j.

        `result_for_pair` is RESULT_P1-style but re-expressed with i as the
        "row" player: "i", "j", or "draw".
        """
        cell = self.cells.setdefault((i, j), [0, 0, 0])
        if result_for_pair == "j":
            cell[0] += 1
        elif result_for_pair == "i":
            cell[1] += 1
        else:
            cell[2] += 1

    def labels(self) -> list[str]:
        """Base agent names where unambiguous, full specs otherwise."""
        bases = [spec.split(":", 1)[0] for spec in self.specs]
        return [base if bases.count(base) == 1 else spec
                for base, spec in zip(bases, self.specs)]

    def render(self) -> str:
        """Grid of "j wins / i wins / draws" cells, upper triangle only."""
        names = self.labels()
        width = max(len(n) for n in names) + 2
        cell_width = max(width, 14)
        lines = [" " * width + "".join(n.ljust(cell_width) for n in names).rstrip()]
        for i, row_name in enumerate(names):
            row = [row_name.ljust(width)]
            for j in range(len(names)):
                if (i, j) in self.cells:
                    a, b, d = self.cells[(i, j)]
                    row.append(f"{a} / {b} / {d}".ljust(cell_width))
                else:
                    row.append("-".ljust(cell_width))
            lines.append("".join(row).rstrip())
        return "\n".join(lines)


def round_robin(specs: list[str | AgentSpec | Agent], games_per_pair: int,
                config: GameConfig, move_time_limit: float | None = 5.0,
                seed: int = 0, workers: int = 1,
                on_record=None) -> CrossPlayTable:
    """All-pairs cross-play with alternating first mover.

    `games_per_pair` must be even so each agent takes the first move equally
    often. Matches may run on `workers` threads; results are folded in
    schedule order, so a seed fully determines the table.
    """
    if len(specs) < 2:
        raise ValueError("round robin needs at least two agents")
    if games_per_pair < 1 or games_per_pair % 2:
        raise ValueError("games_per_pair must be even and positive")
    names = [_spec_text(s) for s in specs]
    table = CrossPlayTable(specs=names, games_per_pair=games_per_pair)

    schedule = []  # (i, j, game_index, match_seed)
    rng = np.random.default_rng(seed)
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            for g in range(games_per_pair):
                schedule.append((i, j, g, int(rng.integers(2 ** 62))))

    def run_one(entry):
        i, j, g, match_seed = entry
        i_is_p1 = g % 2 == 0
        p1, p2 = (specs[i], specs[j]) if i_is_p1 else (specs[j], specs[i])
        record = play_match(p1, p2, config, move_time_limit, seed=match_seed)
        return entry, record

    if workers <= 1:
        outcomes = [run_one(entry) for entry in schedule]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, schedule))

    for (i, j, g, _), record in outcomes:
        i_is_p1 = g % 2 == 0
        if record.result == RESULT_DRAW:
            table.add_result(i, j, "draw")
        elif (record.result == RESULT_P1) == i_is_p1:
            table.add_result(i, j, "i")
        else:
            table.add_result(i, j, "j")
        if on_record is not None:
            on_record(record)
    return table


@dataclass(frozen=True)
class RatingConfig:
    initial: float = 600.0
    k_factor: float = 32.0
    scale: float = 400.0

    def __post_init__(self) -> None:
        if self.initial <= 0 or self.scale <= 0:
            raise ValueError("initial rating and scale must be positive")


def update_ratings(results, config: RatingConfig | None = None) -> dict[str, float]:
    """Fold (name_a, name_b, score_a) results into Elo ratings, in stream order.

    `score_a` is 1 for an a-win, 0 for a b-win, 0.5 for a draw. Total rating
    points are conserved.
    """
    cfg = config or RatingConfig()
    ratings: dict[str, float] = {}
    for name_a, name_b, score_a in results:
        ra = ratings.setdefault(name_a, cfg.initial)
        rb = ratings.setdefault(name_b, cfg.initial)
        expected_a = 1.0 / (1.0 + 10.0 ** ((rb - ra) / cfg.scale))
        ratings[name_a] = ra + cfg.k_factor * (score_a - expected_a)
        ratings[name_b] = rb + cfg.k_factor * ((1.0 - score_a) - (1.0 - expected_a))
    return ratings


def results_from_records(records) -> list[tuple[str, str, float]]:
    """(p1, p2, score) triples from match records, in the given order."""
    score = {RESULT_P1: 1.0, RESULT_P2: 0.0, RESULT_DRAW: 0.5}
    return [(r.p1_spec, r.p2_spec, score[r.result]) for r in records]


def results_from_table(table: CrossPlayTable) -> list[tuple[str, str, float]]:
    """Synthesized (row, col, score) triples from a cross-play table, pair order."""
    results = []
    for (i, j), (wins_j, wins_i, draws) in sorted(table.cells.items()):
        a, b = table.specs[i], table.specs[j]
        results += [(a, b, 0.0)] * wins_j
        results += [(a, b, 1.0)] * wins_i
        results += [(a, b, 0.5)] * draws
    return results
