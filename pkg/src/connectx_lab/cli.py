"""Command-line entry point: play, tournament, train, eval, solve, serve."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .game import Board, GameConfig, IllegalMoveError, Mark, ParseError

logger = logging.getLogger(__name__)

_VALUE_WORDS = {1: "win", 0: "draw", -1: "loss"}


def _board_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rows", type=int, default=6, help="board rows (default 6)")
    parser.add_argument("--cols", type=int, default=7, help="board columns (default 7)")
    parser.add_argument("--inarow", type=int, default=4,
                        help="tokens in a row needed to win (default 4)")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    _board_flags(parser)
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument("--time-limit", type=float, default=5.0,
                        help="seconds per move (default 5)")


def split_agent_list(text: str) -> list[str]:
    """Split a comma-separated agent list, keeping key=value commas attached.

    A token opens a new spec when it is a bare name (no '=') or matches the
    name:key=value head (a ':' before its first '='); plain key=value tokens
    continue the previous spec, so
    "mcts:c=1.4,iters=100,greedy" -> ["mcts:c=1.4,iters=100", "greedy"].
    """
    specs: list[str] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        head = token.split("=", 1)[0]
        starts_new = "=" not in token or ":" in head
        if specs and not starts_new:
            specs[-1] += "," + token
        else:
            specs.append(token)
    return specs


def _read_board(args) -> Board:
    """Board from --board (file or '-' for stdin), else an empty board of the given size."""
    if getattr(args, "board", None):
        text = sys.stdin.read() if args.board == "-" else Path(args.board).read_text()
        return Board.parse(text)
    return Board.empty(GameConfig(args.rows, args.cols, args.inarow))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="connectx",
        description="ConnectX lab: play, run tournaments, train, solve, and serve.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_play = sub.add_parser("play", help="interactive game against an agent")
    _common_flags(p_play)
    p_play.add_argument("--agent", default="greedy", help="opponent agent spec")
    p_play.add_argument("--agent-first", action="store_true",
                        help="let the agent play first (it takes P1)")

    p_tour = sub.add_parser("tournament", help="round-robin cross-play between agents")
    _common_flags(p_tour)
    p_tour.add_argument("--agents", required=True,
                        help="comma-separated agent specs, e.g. greedy,mcts:iters=2000")
    p_tour.add_argument("--games", type=int, default=10, help="games per pair (even)")
    p_tour.add_argument("--out", help="write the cross-play table to this file")
    p_tour.add_argument("--records", help="append one JSON match record per line here")
    p_tour.add_argument("--workers", type=int, default=1, help="concurrent matches")
    p_tour.add_argument("--ratings", action="store_true",
                        help="also print Elo-style ratings (initial 600)")

    p_train = sub.add_parser("train", help="gated self-play training")
    _common_flags(p_train)
    p_train.add_argument("--iters", type=int, default=30, help="policy iterations")
    p_train.add_argument("--episodes", type=int, default=50, help="episodes per iteration")
    p_train.add_argument("--sims", type=int, default=100, help="search simulations per move")
    p_train.add_argument("--gating-games", type=int, default=40)
    p_train.add_argument("--gating-threshold", type=float, default=0.6)
    p_train.add_argument("--replay-capacity", type=int, default=20,
                         help="iterations of examples kept in the replay buffer")
    p_train.add_argument("--temp-plies", type=int, default=8,
                         help="plies played at temperature 1 before going greedy")
    p_train.add_argument("--c-puct", type=float, default=1.5)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--epochs", type=int, default=5)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--l2", type=float, default=1e-4)
    p_train.add_argument("--precision", choices=("f32", "f64"), default="f32")
    p_train.add_argument("--out", default="runs/train", help="checkpoint/log directory")

    p_eval = sub.add_parser("eval", help="ask an agent for its move on a position")
    _common_flags(p_eval)
    p_eval.add_argument("--agent", required=True, help="agent spec")
    p_eval.add_argument("--board", help="serialized board file, or '-' for stdin")

    p_solve = sub.add_parser("solve", help="exhaustive game value of a small position")
    _common_flags(p_solve)
    p_solve.add_argument("--board", help="serialized board file, or '-' for stdin")
    p_solve.add_argument("--cell-cap", type=int, default=16,
                         help="refuse boards with more cells than this")

    p_serve = sub.add_parser("serve", help="run the HTTP game service")
    _common_flags(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--static",
                         help="directory with the built web UI (default: frontend/dist if present)")

    return parser


def _cmd_solve(args) -> int:
    from .minimax import solve_exhaustive
    board = _read_board(args)
    value = solve_exhaustive(board, board.to_move, cell_cap=args.cell_cap)
    print(f"value {value:+d} for {board.to_move.name} ({_VALUE_WORDS[value]} under perfect play)")
    return 0


def _cmd_eval(args) -> int:
    from .arena import make_agent
    board = _read_board(args)
    agent = make_agent(args.agent, seed=args.seed)
    col = agent.choose(board, board.to_move, args.time_limit)
    print(f"column {col}")
    return 0


def _cmd_tournament(args) -> int:
    from .arena import results_from_table, round_robin, update_ratings
    specs = split_agent_list(args.agents)
    config = GameConfig(args.rows, args.cols, args.inarow)
    record_file = open(args.records, "a") if args.records else None

    def sink(record):
        record_file.write(record.to_json() + "\n")
        record_file.flush()  # keep the append-only log current under Ctrl-C

    try:
        table = round_robin(specs, args.games, config, move_time_limit=args.time_limit,
                            seed=args.seed, workers=args.workers,
                            on_record=sink if record_file else None)
    finally:
        if record_file is not None:
            record_file.close()
    rendered = table.render()
    print(rendered)
    if args.out:
        Path(args.out).write_text(rendered + "\n")
    if args.ratings:
        ratings = update_ratings(results_from_table(table))
        print()
        for name, rating in sorted(ratings.items(), key=lambda kv: -kv[1]):
            print(f"{name}: {rating:.1f}")
    return 0


def _cmd_train(args) -> int:
    from .alphazero import TrainConfig, policy_iteration
    config = TrainConfig(
        num_iters=args.iters, num_episodes=args.episodes, num_sims=args.sims,
        gating_games=args.gating_games, gating_threshold=args.gating_threshold,
        replay_capacity=args.replay_capacity, temperature_plies=args.temp_plies,
        c_puct=args.c_puct, batch_size=args.batch_size, epochs=args.epochs,
        lr=args.lr, l2=args.l2, precision=args.precision, seed=args.seed)
    game_config = GameConfig(args.rows, args.cols, args.inarow)
    best, records = policy_iteration(game_config, config, args.out, progress=True)
    print(f"best checkpoint: {best}")
    return 0


def _cmd_play(args) -> int:
    from .arena import make_agent
    config = GameConfig(args.rows, args.cols, args.inarow)
    agent = make_agent(args.agent, seed=args.seed)
    human = Mark.P2 if args.agent_first else Mark.P1
    board = Board.empty(config)
    print(f"you are {human.name}; columns are 0..{config.cols - 1}")
    last_move: int | None = None
    while True:
        print(board.pretty())
        outcome = board.outcome(last_move)
        if outcome.is_terminal:
            if outcome.is_draw:
                print("draw")
            elif outcome.winner == human:
                print("you win")
            else:
                print(f"{agent.name} wins")
            return 0
        if board.to_move == human:
            try:
                text = input("column> ").strip()
            except EOFError:
                print("\nbye")
                return 0
            if not text:
                continue
            try:
                col = int(text)
                board = board.apply(col)
            except (ValueError, IllegalMoveError):
                # interactive courtesy: re-prompt instead of declaring a loss
                print(f"illegal move {text!r}, try again")
                continue
            last_move = col
        else:
            col = agent.choose(board, board.to_move, args.time_limit)
            print(f"{agent.name} plays column {col}")
            board = board.apply(col)
            last_move = col


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    static = args.static
    if static is None:
        candidate = Path("frontend/dist")
        static = str(candidate) if candidate.is_dir() else None
    app = create_app(static_dir=static, default_time_limit=args.time_limit)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "play": _cmd_play,
    "tournament": _cmd_tournament,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "solve": _cmd_solve,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("CONNECTX_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
