import type { ApiClient } from "./api.js";
import type { VoteBody, ZoneGeometry } from "./types.js";

// The seven-point vote vocabulary the service accepts on POST /votes.
export const VOTE_LABELS = [
  "very_cold",
  "cold",
  "slightly_cold",
  "good",
  "slightly_hot",
  "hot",
  "very_hot",
] as const;

export const NOT_IN_AREA = "not_in_area";
export const OUT_OF_OFFICE = "out_of_office";

function pretty(label: string): string {
  return label.replace(/_/g, " ");
}

/** Two-click vote panel: one click picks the zone, one click picks the label.
 *  The two extra buttons ("not in this area", "not in the office today")
 *  post without a zone. Submission is exactly-once per gesture; a failed
 *  POST leaves a retry button holding the same body. */
export class VotePanel {
  readonly element: HTMLElement;
  private selectedZone: number | null = null;
  private inFlight = false;
  private pendingBody: VoteBody | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly user: string,
    zones: ZoneGeometry[],
    private readonly onRecorded: () => void = () => {},
  ) {
    this.element = document.createElement("section");
    this.element.className = "vote-panel";
    this.element.innerHTML = `
      <h2>How do you feel?</h2>
      <div class="zone-buttons"></div>
      <div class="label-buttons"></div>
      <div class="extra-buttons">
        <button class="not-in-area">not in this area</button>
        <button class="out-of-office">not in the office today</button>
      </div>
      <p class="vote-status" hidden></p>
      <button class="vote-retry" hidden>retry</button>
    `;

    const zoneBox = this.element.querySelector(".zone-buttons")!;
    for (const geometry of zones) {
      const button = document.createElement("button");
      button.className = "zone-button";
      button.dataset.zone = String(geometry.zone);
      button.textContent = geometry.name;
      button.addEventListener("click", () => this.selectZone(geometry.zone));
      zoneBox.appendChild(button);
    }

    const labelBox = this.element.querySelector(".label-buttons")!;
    for (const label of VOTE_LABELS) {
      const button = document.createElement("button");
      button.className = "label-button";
      button.dataset.label = label;
      button.textContent = pretty(label);
      button.addEventListener("click", () => {
        void this.submit({ user: this.user, zone: this.selectedZone ?? undefined, label, origin: "prompted" });
      });
      labelBox.appendChild(button);
    }

    this.element.querySelector(".not-in-area")!.addEventListener("click", () => {
      void this.submit({ user: this.user, label: NOT_IN_AREA });
    });
    this.element.querySelector(".out-of-office")!.addEventListener("click", () => {
      void this.submit({ user: this.user, label: OUT_OF_OFFICE });
    });
    this.element.querySelector(".vote-retry")!.addEventListener("click", () => {
      if (this.pendingBody) {
        void this.submit(this.pendingBody);
      }
    });
  }

  private selectZone(zone: number): void {
    this.selectedZone = zone;
    for (const button of this.element.querySelectorAll<HTMLElement>(".zone-button")) {
      button.classList.toggle("selected", button.dataset.zone === String(zone));
    }
  }

  private async submit(body: VoteBody): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    this.setStatus(null);
    this.setRetry(false);
    try {
      const result = await this.api.submitVote(body);
      if (result.kind === "recorded") {
        this.pendingBody = null;
        this.setStatus("vote recorded");
        if (body.label === OUT_OF_OFFICE) {
          this.element.classList.add("closed-for-today");
        }
        this.onRecorded();
      } else if (result.kind === "rejected") {
        this.pendingBody = null;
        this.setStatus(`rejected (${result.rejection.field}): ${result.rejection.message}`);
      } else {
        // Offline: keep the body so the gesture is never silently lost.
        this.pendingBody = body;
        this.setStatus("service unreachable — your vote was not recorded");
        this.setRetry(true);
      }
    } finally {
      this.inFlight = false;
    }
  }

  private setStatus(text: string | null): void {
    const status = this.element.querySelector<HTMLElement>(".vote-status")!;
    status.hidden = text === null;
    status.textContent = text ?? "";
  }

  private setRetry(visible: boolean): void {
    this.element.querySelector<HTMLElement>(".vote-retry")!.hidden = !visible;
  }
}
