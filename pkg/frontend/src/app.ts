import { ApiClient } from "./api.js";
import { RecommendationView } from "./recommendationView.js";
import { StatsView } from "./statsView.js";
import { VotePanel } from "./votePanel.js";

/** Assemble the single-page app inside `root`. The service base URL and the
 *  user id come from query parameters (`?service=...&user=...`). */
export async function mountApp(root: HTMLElement, location: Location): Promise<void> {
  const params = new URLSearchParams(location.search);
  const api = new ApiClient(params.get("service") ?? "");
  const user = params.get("user") ?? "u01";

  const zones = await api.zones();
  const prompt = await api.openPrompt(user);

  const header = document.createElement("header");
  header.innerHTML = `<h1>zonecomfort</h1><p class="user-line"></p>`;
  header.querySelector(".user-line")!.textContent = prompt
    ? `${user} — open prompt: ${prompt.slot} (${prompt.date})`
    : `${user} — no open prompt`;
  root.appendChild(header);

  root.appendChild(new VotePanel(api, user, zones).element);
  const recommendation = new RecommendationView(api, user, zones);
  root.appendChild(recommendation.element);
  root.appendChild(new StatsView(api).element);
}

const rootElement = document.getElementById("app");
if (rootElement) {
  void mountApp(rootElement, window.location);
}
