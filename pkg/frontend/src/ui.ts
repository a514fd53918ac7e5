// DOM layer: renders the grid, wires clicks, shows toasts and status banners.
// All elements are created against the provided root so tests can mount the
// app into a fresh document.

import type { AgentInfo, GameState } from "./api.js";
import { columnOpen, statusMessage, UiState } from "./state.js";

export interface UiCallbacks {
  onNewGame(rows: number, cols: number, inarow: number, agent: string,
            humanFirst: boolean): void;
  onColumnClick(column: number): void;
}

export class GameView {
  readonly form: HTMLFormElement;
  readonly boardHost: HTMLDivElement;
  readonly banner: HTMLDivElement;
  readonly toastHost: HTMLDivElement;
  readonly formError: HTMLDivElement;
  private agentSelect: HTMLSelectElement;

  constructor(private root: HTMLElement, private callbacks: UiCallbacks) {
    this.form = document.createElement("form");
    this.form.id = "new-game";
    this.form.innerHTML = `
      <label>rows <input name="rows" type="number" value="6" min="1" max="12"></label>
      <label>cols <input name="cols" type="number" value="7" min="1" max="12"></label>
      <label>in a row <input name="inarow" type="number" value="4" min="1" max="12"></label>
      <label>agent <select name="agent"><option value="greedy">greedy</option></select></label>
      <label>I play first <input name="humanFirst" type="checkbox" checked></label>
      <button type="submit">new game</button>
    `;
    this.formError = document.createElement("div");
    this.formError.className = "form-error";
    this.banner = document.createElement("div");
    this.banner.className = "banner";
    this.boardHost = document.createElement("div");
    this.boardHost.className = "board-host";
    this.toastHost = document.createElement("div");
    this.toastHost.className = "toast-host";
    this.agentSelect = this.form.querySelector("select")!;

    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(this.form);
      this.callbacks.onNewGame(
        Number(data.get("rows")),
        Number(data.get("cols")),
        Number(data.get("inarow")),
        String(data.get("agent")),
        data.get("humanFirst") !== null,
      );
    });

    root.append(this.form, this.formError, this.banner, this.boardHost, this.toastHost);
  }

  setAgents(agents: AgentInfo[]): void {
    this.agentSelect.innerHTML = "";
    for (const agent of agents) {
      if (agent.name === "alphazero") {
        continue; // needs a checkpoint path; not offered in the form
      }
      const option = document.createElement("option");
      option.value = agent.name;
      option.textContent = agent.name;
      this.agentSelect.append(option);
    }
  }

  showFormError(message: string): void {
    this.formError.textContent = message;
  }

  clearFormError(): void {
    this.formError.textContent = "";
  }

  showSessionError(message: string): void {
    this.banner.textContent = `${message} - start a new game`;
    this.banner.classList.add("error");
  }

  toast(message: string): void {
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = message;
    this.toastHost.append(node);
    setTimeout(() => node.remove(), 2500);
  }

  render(state: UiState): void {
    const game = state.game;
    this.banner.classList.remove("error");
    if (game === null) {
      this.banner.textContent = state.error ?? "";
      this.boardHost.innerHTML = "";
      return;
    }
    if (state.error !== null) {
      this.showSessionError(state.error);
    } else {
      this.banner.textContent = statusMessage(game);
    }

    const locked = state.pending || state.error !== null || game.status !== "ongoing"
      || game.to_move !== game.human_mark;
    const board = document.createElement("div");
    board.className = "board";
    board.dataset.status = game.status;
    board.style.gridTemplateColumns = `repeat(${game.cols}, var(--cell))`;
    const agentMark = game.human_mark === 1 ? 2 : 1;
    const lastAgentCol = game.last_agent_move;
    // the agent's newest token is the topmost one in its reply column
    let highlightRow = -1;
    if (lastAgentCol !== null) {
      for (let row = 0; row < game.rows; row++) {
        if (game.cells[row][lastAgentCol] === agentMark) {
          highlightRow = row;
          break;
        }
      }
    }
    for (let row = 0; row < game.rows; row++) {
      for (let col = 0; col < game.cols; col++) {
        const cell = document.createElement("div");
        const value = game.cells[row][col];
        cell.className = "cell";
        cell.dataset.col = String(col);
        cell.dataset.row = String(row);
        if (value !== 0) {
          const token = document.createElement("div");
          token.className = `token p${value} drop`;
          if (row === highlightRow && col === lastAgentCol) {
            token.classList.add("highlight");
          }
          cell.append(token);
        }
        if (!locked && columnOpen(game, col)) {
          cell.classList.add("open");
        }
        cell.addEventListener("click", () => this.callbacks.onColumnClick(col));
        board.append(cell);
      }
    }
    const meta = document.createElement("div");
    meta.className = "meta";
    const think = game.agent_think_time;
    meta.textContent = `opponent: ${game.agent}`
      + (think !== null ? ` (last reply ${think.toFixed(2)}s)` : "");
    this.boardHost.replaceChildren(board, meta);
  }
}
