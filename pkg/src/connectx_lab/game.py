"""ConnectX rules engine: board state, gravity drops, win/draw detection, serialization.

Boards are immutable values: ``apply`` returns a new board and never mutates
its input, so search trees can share positions freely across threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from hashlib import blake2b

import numpy as np

from . import kernels


class IllegalMoveError(ValueError):
    """Raised when a drop targets a full or out-of-range column."""


class ParseError(ValueError):
    """Raised on malformed, gravity-violating, or count-violating board text."""


class BoardTooLargeError(ValueError):
    """Raised when a board exceeds a size-limited operation's cap."""


class Mark(IntEnum):
    P1 = 1
    P2 = 2

    @property
    def opponent(self) -> "Mark":
        return Mark.P2 if self is Mark.P1 else Mark.P1


@dataclass(frozen=True)
class GameConfig:
    """The (rows, cols, inarow) rule parameters of one game instance."""

    rows: int = 6
    cols: int = 7
    inarow: int = 4

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"board must be at least 1x1, got {self.rows}x{self.cols}")
        if not 1 <= self.inarow <= max(self.rows, self.cols):
            raise ValueError(
                f"inarow must be in [1, max(rows, cols)], got {self.inarow} "
                f"for a {self.rows}x{self.cols} board"
            )


@dataclass(frozen=True)
class Outcome:
    """Game status: ongoing, won by a mark, or drawn."""

    kind: str  # "ongoing" | "win" | "draw"
    winner: Mark | None = None

    @property
    def is_terminal(self) -> bool:
        return self.kind != "ongoing"

    @property
    def is_win(self) -> bool:
        return self.kind == "win"

    @property
    def is_draw(self) -> bool:
        return self.kind == "draw"

    @classmethod
    def win(cls, mark: Mark) -> "Outcome":
        return cls("win", mark)


ONGOING = Outcome("ongoing")
DRAW = Outcome("draw")

_CELL_CHARS = {0: ".", 1: "1", 2: "2"}
_CHAR_CELLS = {v: k for k, v in _CELL_CHARS.items()}


class Board:
    """An immutable ConnectX position.

    The grid is a read-only ``int8`` array of shape (rows, cols); row 0 is the
    top of the board and tokens stack from the bottom row upward. The side to
    move is derived from the token counts (the first player moves first), so a
    board is fully determined by its grid.
    """

    __slots__ = ("config", "_grid", "to_move")

    def __init__(self, config: GameConfig, grid: np.ndarray | None = None):
        if grid is None:
            grid = np.zeros((config.rows, config.cols), dtype=np.int8)
        else:
            grid = np.array(grid, dtype=np.int8)
            self._validate(config, grid)
        grid.setflags(write=False)
        self.config = config
        self._grid = grid
        self.to_move = self._derive_to_move(grid)

    @staticmethod
    def _derive_to_move(grid: np.ndarray) -> Mark:
        return Mark.P1 if np.count_nonzero(grid == 1) == np.count_nonzero(grid == 2) else Mark.P2

    @staticmethod
    def _validate(config: GameConfig, grid: np.ndarray) -> None:
        if grid.shape != (config.rows, config.cols):
            raise ValueError(f"grid shape {grid.shape} does not match config "
                             f"{config.rows}x{config.cols}")
        if not np.isin(grid, (0, 1, 2)).all():
            raise ValueError("grid cells must be 0, 1, or 2")
        # gravity: within a column, every empty cell lies above every token
        for c in range(config.cols):
            column = grid[:, c]
            occupied = np.flatnonzero(column)
            if occupied.size and (column[occupied[0]:] == 0).any():
                raise ValueError(f"gravity violation in column {c}")
        diff = np.count_nonzero(grid == 1) - np.count_nonzero(grid == 2)
        if diff not in (0, 1):
            raise ValueError(f"token counts violate alternation (P1 - P2 = {diff})")

    @classmethod
    def empty(cls, config: GameConfig) -> "Board":
        return cls(config)

    @classmethod
    def from_moves(cls, config: GameConfig, moves: list[int]) -> "Board":
        board = cls(config)
        for col in moves:
            board = board.apply(col)
        return board

    @classmethod
    def _trusted(cls, config: GameConfig, grid: np.ndarray, to_move: Mark) -> "Board":
        board = object.__new__(cls)
        grid.setflags(write=False)
        board.config = config
        board._grid = grid
        board.to_move = to_move
        return board

    @property
    def grid(self) -> np.ndarray:
        """Read-only view of the cell grid."""
        return self._grid

    def grid_copy(self) -> np.ndarray:
        """Writable copy of the grid, for scratch use in playouts."""
        return self._grid.copy()

    def legal_moves(self) -> list[int]:
        return [c for c in range(self.config.cols) if self._grid[0, c] == 0]

    def is_full(self) -> bool:
        return bool(kernels.board_is_full(self._grid))

    def num_tokens(self) -> int:
        return int(np.count_nonzero(self._grid))

    def apply(self, col: int) -> "Board":
        """Drop the side-to-move's token in `col`, returning the new position."""
        if not isinstance(col, (int, np.integer)) or not 0 <= col < self.config.cols:
            raise IllegalMoveError(f"column {col!r} out of range for {self.config.cols} columns")
        row = int(kernels.lowest_empty_row(self._grid, int(col)))
        if row < 0:
            raise IllegalMoveError(f"column {col} is full")
        grid = self._grid.copy()
        grid[row, col] = int(self.to_move)
        return Board._trusted(self.config, grid, self.to_move.opponent)

    def outcome(self, last_move: int | None = None) -> Outcome:
        """Win/draw/ongoing status; with `last_move`, only lines through that drop are scanned."""
        if last_move is not None:
            col = int(last_move)
            occupied = np.flatnonzero(self._grid[:, col])
            if occupied.size:
                row = int(occupied[0])
                if kernels.win_at(self._grid, self.config.inarow, row, col):
                    return Outcome.win(Mark(int(self._grid[row, col])))
            return DRAW if self.is_full() else ONGOING
        winner = int(kernels.scan_winner(self._grid, self.config.inarow))
        if winner:
            return Outcome.win(Mark(winner))
        return DRAW if self.is_full() else ONGOING

    def serialize(self) -> str:
        """Text form: header "rows cols inarow to_move", then one row per line."""
        header = f"{self.config.rows} {self.config.cols} {self.config.inarow} {int(self.to_move)}"
        rows = ["".join(_CELL_CHARS[int(v)] for v in row) for row in self._grid]
        return "\n".join([header] + rows)

    @classmethod
    def parse(cls, text: str, config: GameConfig | None = None) -> "Board":
        """Inverse of serialize; `config`, when given, must match the header."""
        lines = text.rstrip("\n").split("\n")
        if not lines:
            raise ParseError("empty input")
        fields = lines[0].split()
        if len(fields) != 4:
            raise ParseError(f"header must be 'rows cols inarow to_move', got {lines[0]!r}")
        try:
            rows, cols, inarow, to_move = (int(f) for f in fields)
        except ValueError as exc:
            raise ParseError(f"non-integer header field in {lines[0]!r}") from exc
        if to_move not in (1, 2):
            raise ParseError(f"to_move must be 1 or 2, got {to_move}")
        try:
            parsed_config = GameConfig(rows, cols, inarow)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        if config is not None and config != parsed_config:
            raise ParseError(f"header {parsed_config} does not match expected {config}")
        if len(lines) != 1 + rows:
            raise ParseError(f"expected {rows} board rows, got {len(lines) - 1}")
        grid = np.zeros((rows, cols), dtype=np.int8)
        for r, line in enumerate(lines[1:]):
            if len(line) != cols:
                raise ParseError(f"row {r} has length {len(line)}, expected {cols}")
            for c, ch in enumerate(line):
                if ch not in _CHAR_CELLS:
                    raise ParseError(f"invalid cell character {ch!r} at row {r}, column {c}")
                grid[r, c] = _CHAR_CELLS[ch]
        try:
            board = cls(parsed_config, grid)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        if int(board.to_move) != to_move:
            raise ParseError(
                f"header says {to_move} to move but token counts imply {int(board.to_move)}"
            )
        return board

    def position_hash(self) -> int:
        """Deterministic 64-bit hash, stable across processes and runs."""
        h = blake2b(digest_size=8)
        h.update(struct.pack("<iiib", self.config.rows, self.config.cols,
                             self.config.inarow, int(self.to_move)))
        h.update(self._grid.tobytes())
        return int.from_bytes(h.digest(), "little")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Board):
            return NotImplemented
        return (self.config == other.config
                and self.to_move == other.to_move
                and np.array_equal(self._grid, other._grid))

    def __hash__(self) -> int:
        return self.position_hash()

    def __repr__(self) -> str:
        return (f"Board({self.config.rows}x{self.config.cols} inarow={self.config.inarow} "
                f"to_move={self.to_move.name} tokens={self.num_tokens()})")

    def __str__(self) -> str:
        return self.serialize()

    def pretty(self) -> str:
        """Human-oriented rendering with column indices."""
        header = " ".join(str(c % 10) for c in range(self.config.cols))
        rows = [" ".join(_CELL_CHARS[int(v)] for v in row) for row in self._grid]
        return "\n".join(rows + ["-" * len(header), header])
