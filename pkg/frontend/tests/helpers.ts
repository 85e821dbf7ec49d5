import { vi } from "vitest";

import type { ZoneGeometry } from "../src/types.js";

export const ZONES: ZoneGeometry[] = [
  { zone: 1, name: "workspace one", polygon: [[0, 0], [10, 0], [10, 8], [0, 8]] },
  { zone: 2, name: "workspace two", polygon: [[10, 0], [20, 0], [20, 8], [10, 8]] },
  { zone: 3, name: "workspace three", polygon: [[20, 0], [30, 0], [30, 8], [20, 8]] },
  { zone: 4, name: "workspace four", polygon: [[30, 0], [40, 0], [40, 8], [30, 8]] },
];

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

/** Replace global fetch with a stub service. `respond` maps a request to a
 *  Response (or throws to simulate the network being down); every request is
 *  recorded for body-level assertions. */
export function stubService(
  respond: (request: RecordedRequest) => Response,
): { requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  vi.stubGlobal(
    "fetch",
    vi.fn(async (url: string, init?: RequestInit) => {
      const request: RecordedRequest = {
        url: String(url),
        method: init?.method ?? "GET",
        body: init?.body ? JSON.parse(String(init.body)) : undefined,
      };
      requests.push(request);
      return respond(request);
    }),
  );
  return { requests };
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function click(root: HTMLElement, selector: string): void {
  const element = root.querySelector<HTMLElement>(selector);
  if (!element) {
    throw new Error(`no element matches ${selector}`);
  }
  element.click();
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
