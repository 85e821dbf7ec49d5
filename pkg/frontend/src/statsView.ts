import type { ApiClient } from "./api.js";
import type { StatRow } from "./types.js";

// Column order of the response-rate summary as served by the dashboard
// endpoint; headers are display text, keys index the payload rows.
export const STAT_COLUMNS: { key: string; header: string }[] = [
  { key: "mean", header: "Mean" },
  { key: "std", header: "STD" },
  { key: "min", header: "Min" },
  { key: "q25", header: "25%" },
  { key: "median", header: "50%" },
  { key: "q75", header: "75%" },
  { key: "max", header: "Max" },
];

function formatCell(value: number | null | undefined): string {
  if (value === null || value === undefined) {
    return "—";
  }
  return value.toFixed(3);
}

/** Response-rate dashboard: overall and per-person distribution summaries
 *  for a chosen period. Values are rendered as served (no clamping — a
 *  per-person rate above 1.0 is real: active triggers add responses). */
export class StatsView {
  readonly element: HTMLElement;

  constructor(private readonly api: ApiClient) {
    this.element = document.createElement("section");
    this.element.className = "stats-view";
    this.element.innerHTML = `
      <h2>Response rates</h2>
      <form class="period-form">
        <label>from <input type="date" name="from" required /></label>
        <label>to <input type="date" name="to" required /></label>
        <button type="submit">show</button>
      </form>
      <p class="stats-empty" hidden>no responses in this period</p>
      <table class="stats-table" hidden>
        <thead><tr><th></th></tr></thead>
        <tbody></tbody>
      </table>
    `;
    this.element.querySelector(".period-form")!.addEventListener("submit", (event) => {
      event.preventDefault();
      const form = event.target as HTMLFormElement;
      const from = (form.elements.namedItem("from") as HTMLInputElement).value;
      const to = (form.elements.namedItem("to") as HTMLInputElement).value;
      void this.refresh(from, to);
    });
  }

  async refresh(from: string, to: string): Promise<void> {
    const payload = await this.api.responseRates(from, to);
    this.render(payload.overall, payload.per_person);
  }

  render(overall: StatRow, perPerson: StatRow): void {
    const table = this.element.querySelector<HTMLTableElement>(".stats-table")!;
    const empty = this.element.querySelector<HTMLElement>(".stats-empty")!;
    const hasData = STAT_COLUMNS.some((c) => overall[c.key] !== null && overall[c.key] !== undefined);
    table.hidden = !hasData;
    empty.hidden = hasData;
    if (!hasData) {
      return;
    }
    const head = table.querySelector("thead tr")!;
    head.textContent = "";
    head.appendChild(document.createElement("th"));
    for (const column of STAT_COLUMNS) {
      const th = document.createElement("th");
      th.textContent = column.header;
      head.appendChild(th);
    }
    const body = table.querySelector("tbody")!;
    body.textContent = "";
    for (const [name, row] of [
      ["overall", overall],
      ["per person", perPerson],
    ] as const) {
      const tr = document.createElement("tr");
      const th = document.createElement("th");
      th.textContent = name;
      tr.appendChild(th);
      for (const column of STAT_COLUMNS) {
        const td = document.createElement("td");
        td.textContent = formatCell(row[column.key]);
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
  }
}
