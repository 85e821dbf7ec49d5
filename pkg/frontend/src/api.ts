import type {
  OpenPrompt,
  RecommendationPayload,
  StatsPayload,
  VoteBody,
  VoteRejection,
  ZoneGeometry,
} from "./types.js";

export type VoteResult =
  | { kind: "recorded" }
  | { kind: "rejected"; rejection: VoteRejection }
  | { kind: "offline" };

export type RecommendationResult =
  | { kind: "ok"; recommendation: RecommendationPayload }
  | { kind: "none"; message: string };

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async submitVote(body: VoteBody): Promise<VoteResult> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/votes`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch {
      return { kind: "offline" };
    }
    if (response.status === 422) {
      const payload = await response.json();
      return { kind: "rejected", rejection: payload.detail as VoteRejection };
    }
    if (!response.ok) {
      return { kind: "offline" };
    }
    return { kind: "recorded" };
  }

  async openPrompt(user: string): Promise<OpenPrompt | null> {
    const response = await fetch(
      `${this.baseUrl}/prompts?user=${encodeURIComponent(user)}`,
    );
    const payload = await response.json();
    return payload.open_prompt;
  }

  async zones(): Promise<ZoneGeometry[]> {
    const response = await fetch(`${this.baseUrl}/zones`);
    const payload = await response.json();
    return payload.zones;
  }

  async recommendation(user: string): Promise<RecommendationResult> {
    const response = await fetch(
      `${this.baseUrl}/recommendation?user=${encodeURIComponent(user)}`,
    );
    if (response.status === 404) {
      const payload = await response.json();
      return { kind: "none", message: payload.message ?? "no recommendation available" };
    }
    return { kind: "ok", recommendation: await response.json() };
  }

  async responseRates(from: string, to: string): Promise<StatsPayload> {
    const params = new URLSearchParams({ from, to });
    const response = await fetch(`${this.baseUrl}/stats/response-rate?${params}`);
    return await response.json();
  }
}
