import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { VotePanel } from "../src/votePanel.js";
import { ZONES, click, flush, jsonResponse, stubService } from "./helpers.js";

function mountPanel(user = "u01"): HTMLElement {
  const panel = new VotePanel(new ApiClient(""), user, ZONES);
  document.body.appendChild(panel.element);
  return panel.element;
}

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("vote panel", () => {
  it("posts the exact two-click body: zone 2 + slightly hot", async () => {
    const { requests } = stubService(() => jsonResponse({ status: "recorded" }));
    const element = mountPanel();

    click(element, '.zone-button[data-zone="2"]');
    click(element, '.label-button[data-label="slightly_hot"]');
    await flush();

    expect(requests).toHaveLength(1);
    expect(requests[0].method).toBe("POST");
    expect(requests[0].url).toBe("/votes");
    expect(requests[0].body).toEqual({
      user: "u01",
      zone: 2,
      label: "slightly_hot",
      origin: "prompted",
    });
  });

  it("renders all seven labels plus the two extra buttons", () => {
    stubService(() => jsonResponse({}));
    const element = mountPanel();
    expect(element.querySelectorAll(".label-button")).toHaveLength(7);
    expect(element.querySelector(".not-in-area")).not.toBeNull();
    expect(element.querySelector(".out-of-office")).not.toBeNull();
  });

  it("posts out_of_office without a zone and closes the panel for the day", async () => {
    const { requests } = stubService(() => jsonResponse({ status: "recorded" }));
    const element = mountPanel("u02");

    click(element, ".out-of-office");
    await flush();

    expect(requests[0].body).toEqual({ user: "u02", label: "out_of_office" });
    expect(element.classList.contains("closed-for-today")).toBe(true);
  });

  it("posts not_in_area without a zone", async () => {
    const { requests } = stubService(() => jsonResponse({ status: "recorded" }));
    const element = mountPanel();

    click(element, ".not-in-area");
    await flush();

    expect(requests[0].body).toEqual({ user: "u01", label: "not_in_area" });
  });

  it("submits exactly once per gesture under a double click", async () => {
    const { requests } = stubService(() => jsonResponse({ status: "recorded" }));
    const element = mountPanel();

    click(element, '.zone-button[data-zone="1"]');
    click(element, '.label-button[data-label="good"]');
    click(element, '.label-button[data-label="good"]');
    await flush();

    expect(requests).toHaveLength(1);
  });

  it("surfaces a rejection inline with the field at fault", async () => {
    stubService(() =>
      jsonResponse(
        { detail: { code: "vote_rejected", field: "origin", message: "no open prompt for this user" } },
        422,
      ),
    );
    const element = mountPanel();

    click(element, '.zone-button[data-zone="1"]');
    click(element, '.label-button[data-label="hot"]');
    await flush();

    const status = element.querySelector<HTMLElement>(".vote-status")!;
    expect(status.hidden).toBe(false);
    expect(status.textContent).toContain("origin");
    expect(status.textContent).toContain("no open prompt for this user");
    expect(element.querySelector<HTMLElement>(".vote-retry")!.hidden).toBe(true);
  });

  it("offers a retry that re-posts the same body when the service is offline", async () => {
    let failing = true;
    const { requests } = stubService(() => {
      if (failing) {
        throw new TypeError("fetch failed");
      }
      return jsonResponse({ status: "recorded" });
    });
    const element = mountPanel();

    click(element, '.zone-button[data-zone="3"]');
    click(element, '.label-button[data-label="cold"]');
    await flush();

    const retry = element.querySelector<HTMLElement>(".vote-retry")!;
    expect(retry.hidden).toBe(false);

    failing = false;
    click(element, ".vote-retry");
    await flush();

    expect(requests).toHaveLength(2);
    expect(requests[1].body).toEqual(requests[0].body);
    expect(element.querySelector<HTMLElement>(".vote-retry")!.hidden).toBe(true);
  });
});
