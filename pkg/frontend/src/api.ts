// Typed client for the game service JSON API. The UI is a thin client: every
// rule decision comes from the server, so this module is the whole contract.

export type PlayerMark = 1 | 2;
export type GameStatus = "ongoing" | "human_won" | "agent_won" | "draw";

export interface GameState {
  id: string;
  rows: number;
  cols: number;
  inarow: number;
  agent: string;
  human_mark: PlayerMark;
  to_move: PlayerMark;
  status: GameStatus;
  board_text: string;
  cells: number[][];
  moves: number[];
  last_agent_move: number | null;
  agent_think_time: number | null;
}

export interface NewGameRequest {
  rows: number;
  cols: number;
  inarow: number;
  agent: string;
  human_plays_first: boolean;
  time_limit?: number;
  seed?: number;
}

export interface AgentParamInfo {
  type: string;
  default: unknown;
}

export interface AgentInfo {
  name: string;
  params: Record<string, AgentParamInfo>;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`${status}: ${detail}`);
  }
}

let baseUrl = "";

/** Point the client at another origin (used by tests; default is same-origin). */
export function setBaseUrl(url: string): void {
  baseUrl = url.replace(/\/$/, "");
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export function createGame(req: NewGameRequest): Promise<GameState> {
  return request<GameState>("/api/games", {
    method: "POST",
    body: JSON.stringify(req),
  });
}

export function getGame(id: string): Promise<GameState> {
  return request<GameState>(`/api/games/${encodeURIComponent(id)}`);
}

export function postMove(id: string, column: number): Promise<GameState> {
  return request<GameState>(`/api/games/${encodeURIComponent(id)}/moves`, {
    method: "POST",
    body: JSON.stringify({ column }),
  });
}

export async function listAgents(): Promise<AgentInfo[]> {
  const body = await request<{ agents: AgentInfo[] }>("/api/agents");
  return body.agents;
}
