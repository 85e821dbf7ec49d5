import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { STAT_COLUMNS, StatsView } from "../src/statsView.js";
import { flush, jsonResponse, stubService } from "./helpers.js";

const OVERALL = {
  mean: 0.639,
  std: 0.133,
  min: 0.386,
  q25: 0.561,
  median: 0.63,
  q75: 0.717,
  max: 0.98,
};

const PER_PERSON = {
  mean: 0.654,
  std: 0.119,
  min: 0.567,
  q25: 0.6,
  median: 0.611,
  q75: 0.633,
  max: 1.153,
};

function mountView(): { element: HTMLElement; view: StatsView } {
  const view = new StatsView(new ApiClient(""));
  document.body.appendChild(view.element);
  return { element: view.element, view };
}

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("stats view", () => {
  it("renders all seven summary columns for both rows", async () => {
    const { element, view } = mountView();
    view.render(OVERALL, PER_PERSON);

    const headers = [...element.querySelectorAll("thead th")].map((th) => th.textContent);
    expect(headers).toEqual(["", "Mean", "STD", "Min", "25%", "50%", "75%", "Max"]);
    expect(STAT_COLUMNS).toHaveLength(7);

    const rows = element.querySelectorAll("tbody tr");
    expect(rows).toHaveLength(2);
    for (const row of rows) {
      expect(row.querySelectorAll("td")).toHaveLength(7);
    }
  });

  it("renders a per-person max above 1.0 without clamping", () => {
    const { element, view } = mountView();
    view.render(OVERALL, PER_PERSON);

    const perPersonCells = [...element.querySelectorAll("tbody tr")[1].querySelectorAll("td")];
    expect(perPersonCells[perPersonCells.length - 1].textContent).toBe("1.153");
  });

  it("shows the empty state for a period with no responses", () => {
    const { element, view } = mountView();
    const empty = Object.fromEntries(STAT_COLUMNS.map((c) => [c.key, null]));
    view.render(empty, empty);

    expect(element.querySelector<HTMLElement>(".stats-table")!.hidden).toBe(true);
    expect(element.querySelector<HTMLElement>(".stats-empty")!.hidden).toBe(false);
  });

  it("fetches the chosen period through the stats endpoint", async () => {
    const { requests } = stubService(() =>
      jsonResponse({ overall: OVERALL, per_person: PER_PERSON, omitted_users: [] }),
    );
    const { element, view } = mountView();

    await view.refresh("2019-01-07", "2019-02-15");
    await flush();

    expect(requests[0].url).toBe("/stats/response-rate?from=2019-01-07&to=2019-02-15");
    expect(element.querySelector<HTMLElement>(".stats-table")!.hidden).toBe(false);
  });
});
