// Application wiring: one UiState, one view, server calls on user actions.

import { ApiError, createGame, listAgents, postMove } from "./api.js";
import { canSubmitMove, initialUiState, optimisticDrop, UiState,
         validateBoardChoice } from "./state.js";
import { GameView } from "./ui.js";

export class App {
  state: UiState = initialUiState();
  view: GameView;

  constructor(root: HTMLElement) {
    this.view = new GameView(root, {
      onNewGame: (rows, cols, inarow, agent, humanFirst) =>
        void this.newGame(rows, cols, inarow, agent, humanFirst),
      onColumnClick: (column) => void this.playColumn(column),
    });
  }

  async start(): Promise<void> {
    try {
      this.view.setAgents(await listAgents());
    } catch {
      // keep the built-in default option; the form still works
    }
    this.view.render(this.state);
  }

  async newGame(rows: number, cols: number, inarow: number, agent: string,
                humanFirst: boolean): Promise<void> {
    const problem = validateBoardChoice(rows, cols, inarow);
    if (problem !== null) {
      this.view.showFormError(problem);
      return; // client-side bound check: no request leaves the page
    }
    this.view.clearFormError();
    try {
      const game = await createGame({
        rows, cols, inarow, agent, human_plays_first: humanFirst,
      });
      this.state = { game, pending: false, error: null };
    } catch (error) {
      if (error instanceof ApiError) {
        this.view.showFormError(error.detail);
        return;
      }
      throw error;
    }
    this.view.render(this.state);
  }

  async playColumn(column: number): Promise<void> {
    if (!canSubmitMove(this.state, column)) {
      return;
    }
    const game = this.state.game!;
    // optimistic drop with the fall animation; the server reply is authoritative
    this.state = { ...this.state, pending: true, game: optimisticDrop(game, column) };
    this.view.render(this.state);
    try {
      const next = await postMove(game.id, column);
      this.state = { game: next, pending: false, error: null };
    } catch (error) {
      if (error instanceof ApiError && error.status === 422) {
        this.state = { game, pending: false, error: null }; // restore prior state
        this.view.toast("illegal move");
      } else if (error instanceof ApiError) {
        this.state = { game, pending: false, error: error.detail };
      } else {
        this.state = { game, pending: false, error: String(error) };
      }
    }
    this.view.render(this.state);
  }
}

export function mount(root: HTMLElement): App {
  const app = new App(root);
  void app.start();
  return app;
}

declare global {
  interface Window {
    connectxApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  window.connectxApp = mount(document.getElementById("app")!);
}
