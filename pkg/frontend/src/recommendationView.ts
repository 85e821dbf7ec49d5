import type { ApiClient } from "./api.js";
import type { RecommendationPayload, ZoneGeometry } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

/** Floorplan with the recommended zone highlighted, plus the service-provided
 *  comfort label and, when flagged, the "no better option" explanation. */
export class RecommendationView {
  readonly element: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly user: string,
    private readonly zones: ZoneGeometry[],
  ) {
    this.element = document.createElement("section");
    this.element.className = "recommendation-view";
    this.element.innerHTML = `
      <h2>Where should you sit?</h2>
      <button class="refresh-recommendation">get recommendation</button>
      <p class="recommendation-text" hidden></p>
      <p class="no-better-option" hidden>no better option was available</p>
      <p class="recommendation-empty" hidden></p>
      <div class="floorplan"></div>
    `;
    this.element
      .querySelector(".refresh-recommendation")!
      .addEventListener("click", () => void this.refresh());
    this.renderFloorplan(null);
  }

  async refresh(): Promise<void> {
    const result = await this.api.recommendation(this.user);
    if (result.kind === "none") {
      this.renderEmpty(result.message);
      return;
    }
    this.renderRecommendation(result.recommendation);
  }

  renderRecommendation(recommendation: RecommendationPayload): void {
    const text = this.element.querySelector<HTMLElement>(".recommendation-text")!;
    text.hidden = false;
    // Label strings come from the service verbatim.
    text.textContent = `${recommendation.zone_name}: ${recommendation.label}`;
    this.element.querySelector<HTMLElement>(".no-better-option")!.hidden =
      !recommendation.no_better_option;
    this.element.querySelector<HTMLElement>(".recommendation-empty")!.hidden = true;
    this.renderFloorplan(recommendation.floorplan_highlight);
  }

  renderEmpty(message: string): void {
    this.element.querySelector<HTMLElement>(".recommendation-text")!.hidden = true;
    this.element.querySelector<HTMLElement>(".no-better-option")!.hidden = true;
    const empty = this.element.querySelector<HTMLElement>(".recommendation-empty")!;
    empty.hidden = false;
    empty.textContent = message;
    this.renderFloorplan(null);
  }

  private renderFloorplan(highlightZone: number | null): void {
    const host = this.element.querySelector<HTMLElement>(".floorplan")!;
    host.textContent = "";
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", this.viewBox());
    for (const geometry of this.zones) {
      const polygon = document.createElementNS(SVG_NS, "polygon");
      polygon.setAttribute("points", geometry.polygon.map(([x, y]) => `${x},${y}`).join(" "));
      polygon.setAttribute("data-zone", String(geometry.zone));
      polygon.setAttribute(
        "class",
        geometry.zone === highlightZone ? "zone highlighted" : "zone",
      );
      svg.appendChild(polygon);
      const label = document.createElementNS(SVG_NS, "text");
      const xs = geometry.polygon.map(([x]) => x);
      const ys = geometry.polygon.map(([, y]) => y);
      label.setAttribute("x", String((Math.min(...xs) + Math.max(...xs)) / 2));
      label.setAttribute("y", String((Math.min(...ys) + Math.max(...ys)) / 2));
      label.setAttribute("text-anchor", "middle");
      label.textContent = geometry.name;
      svg.appendChild(label);
    }
    host.appendChild(svg);
  }

  private viewBox(): string {
    const points = this.zones.flatMap((z) => z.polygon);
    if (!points.length) {
      return "0 0 1 1";
    }
    const xs = points.map(([x]) => x);
    const ys = points.map(([, y]) => y);
    const minX = Math.min(...xs);
    const minY = Math.min(...ys);
    return `${minX} ${minY} ${Math.max(...xs) - minX} ${Math.max(...ys) - minY}`;
  }
}
