// Pure view-state logic: everything the DOM layer needs to decide without
// talking to the server. The only client-side rule is disabling visibly full
// columns; the server stays the source of truth via its 422 responses.

import type { GameState } from "./api.js";

export interface UiState {
  game: GameState | null;
  pending: boolean; // a move request is in flight; input is locked
  error: string | null; // session-level failure (404/409), shown as a banner
}

export function initialUiState(): UiState {
  return { game: null, pending: false, error: null };
}

export function columnOpen(game: GameState, column: number): boolean {
  if (column < 0 || column >= game.cols) {
    return false;
  }
  return game.cells[0][column] === 0;
}

/** Gate for submitting a human move; the UI never posts when this is false. */
export function canSubmitMove(state: UiState, column: number): boolean {
  if (state.game === null || state.pending || state.error !== null) {
    return false;
  }
  const game = state.game;
  return (
    game.status === "ongoing" &&
    game.to_move === game.human_mark &&
    columnOpen(game, column)
  );
}

export function validateBoardChoice(rows: number, cols: number, inarow: number): string | null {
  if (!Number.isInteger(rows) || rows < 1 || rows > 12) {
    return "rows must be between 1 and 12";
  }
  if (!Number.isInteger(cols) || cols < 1 || cols > 12) {
    return "columns must be between 1 and 12";
  }
  if (!Number.isInteger(inarow) || inarow < 1 || inarow > Math.max(rows, cols)) {
    return "in-a-row must be between 1 and the longer board side";
  }
  return null;
}

export function statusMessage(game: GameState): string {
  switch (game.status) {
    case "human_won":
      return "You won";
    case "agent_won":
      return "The agent won";
    case "draw":
      return "Draw";
    default:
      return game.to_move === game.human_mark ? "Your turn" : "Agent thinking...";
  }
}

/** Board with the human's token optimistically dropped into `column`. */
export function optimisticDrop(game: GameState, column: number): GameState {
  const cells = game.cells.map((row) => row.slice());
  for (let row = game.rows - 1; row >= 0; row--) {
    if (cells[row][column] === 0) {
      cells[row][column] = game.human_mark;
      break;
    }
  }
  return { ...game, cells, to_move: (3 - game.human_mark) as 1 | 2 };
}
