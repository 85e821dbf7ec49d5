import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { RecommendationView } from "../src/recommendationView.js";
import type { RecommendationPayload } from "../src/types.js";
import { ZONES, click, flush, jsonResponse, stubService } from "./helpers.js";

function payload(overrides: Partial<RecommendationPayload> = {}): RecommendationPayload {
  return {
    user: "u01",
    zone: 1,
    zone_name: "workspace one",
    label: "comfortable",
    no_better_option: false,
    scores: [
      { zone: 1, predicted: 0.2, label: "comfortable", model_provenance: "svr [set v1]" },
      { zone: 2, predicted: -0.8, label: "slightly_cold", model_provenance: "svr [set v1]" },
    ],
    floorplan_highlight: 1,
    generated_at: "2019-02-15T14:00:00Z",
    ...overrides,
  };
}

function mountView(): { element: HTMLElement; view: RecommendationView } {
  const view = new RecommendationView(new ApiClient(""), "u01", ZONES);
  document.body.appendChild(view.element);
  return { element: view.element, view };
}

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("recommendation view", () => {
  it("highlights the recommended zone polygon and shows the label verbatim", async () => {
    stubService(() => jsonResponse(payload({ label: "slightly_cold" })));
    const { element } = mountView();

    click(element, ".refresh-recommendation");
    await flush();

    const highlighted = element.querySelectorAll("polygon.highlighted");
    expect(highlighted).toHaveLength(1);
    expect(highlighted[0].getAttribute("data-zone")).toBe("1");
    expect(element.querySelector(".recommendation-text")!.textContent).toBe(
      "workspace one: slightly_cold",
    );
  });

  it("shows the explanation line only when no_better_option is flagged", async () => {
    const { element, view } = mountView();

    view.renderRecommendation(payload({ no_better_option: true }));
    expect(element.querySelector<HTMLElement>(".no-better-option")!.hidden).toBe(false);
    expect(element.querySelector(".no-better-option")!.textContent).toBe(
      "no better option was available",
    );

    view.renderRecommendation(payload({ no_better_option: false }));
    expect(element.querySelector<HTMLElement>(".no-better-option")!.hidden).toBe(true);
  });

  it("renders the empty state without a highlight when none is available", async () => {
    stubService(() =>
      jsonResponse({ code: "no_recommendation_available", message: "no zone is scorable" }, 404),
    );
    const { element } = mountView();

    click(element, ".refresh-recommendation");
    await flush();

    expect(element.querySelectorAll("polygon.highlighted")).toHaveLength(0);
    const empty = element.querySelector<HTMLElement>(".recommendation-empty")!;
    expect(empty.hidden).toBe(false);
    expect(empty.textContent).toBe("no zone is scorable");
    expect(element.querySelector<HTMLElement>(".recommendation-text")!.hidden).toBe(true);
  });

  it("draws every zone from the service geometry", () => {
    const { element } = mountView();
    const polygons = element.querySelectorAll("polygon.zone");
    expect(polygons).toHaveLength(4);
    expect(polygons[1].getAttribute("points")).toBe("10,0 20,0 20,8 10,8");
  });
});
