// Metrics panel: every number is the service's value verbatim, the
// progress indicator is decisions/queue_length, and recordings without
// a reference degrade to an explanatory note.

import { describe, expect, it } from "vitest";
import { renderMetrics } from "../src/metrics.js";
import { agreementDoc, metricsPayload } from "./fixtures.js";

function mount(html: string): HTMLElement {
  const div = document.createElement("div");
  div.innerHTML = html;
  return div;
}

describe("renderMetrics", () => {
  it("shows progress as decisions/queue_length", () => {
    const root = mount(renderMetrics(metricsPayload("s", 1, 100)));
    expect(root.querySelector("[data-role=progress]")?.textContent).toBe("1/100");
    expect(root.textContent).toContain("session open");
  });

  it("prints baseline and current values verbatim, no rounding", () => {
    const m = metricsPayload("s", 2, 5, {
      baseline: agreementDoc(0.8099999999999998, 900),
      current: agreementDoc(0.8500000000000001, 900),
    });
    const root = mount(renderMetrics(m));
    const baseline = [...root.querySelectorAll("td[data-side=baseline]")];
    const current = [...root.querySelectorAll("td[data-side=current]")];
    expect(baseline[0]?.textContent).toBe("0.8099999999999998");
    expect(current[0]?.textContent).toBe("0.8500000000000001");
    // cohen kappa row carries the doc's value untouched too
    expect(current[1]?.textContent).toBe(String(0.8500000000000001 - 0.1));
    expect(root.querySelector("[data-role=epochs-retained]")?.textContent).toBe("20");
  });

  it("labels the comparison columns baseline and current", () => {
    const root = mount(renderMetrics(metricsPayload("s", 0, 3)));
    const heads = [...root.querySelectorAll("thead th")].map((el) => el.textContent);
    expect(heads).toEqual(["", "baseline", "current"]);
    const rows = [...root.querySelectorAll("tbody th")].map((el) => el.textContent);
    expect(rows).toEqual(["accuracy", "cohen kappa", "macro F1", "weighted F1", "epochs"]);
  });

  it("explains missing reference instead of showing a table", () => {
    const m = metricsPayload("s", 0, 3, {
      baseline: null,
      current: null,
      epochs_retained: null,
    });
    const root = mount(renderMetrics(m));
    expect(root.querySelector("table")).toBeNull();
    expect(root.querySelector(".no-reference")?.textContent).toContain(
      "no reference hypnogram",
    );
    // progress still renders; it does not depend on agreement
    expect(root.querySelector("[data-role=progress]")?.textContent).toBe("0/3");
  });

  it("reflects a completed session in the status line", () => {
    const root = mount(renderMetrics(metricsPayload("s", 3, 3, { status: "complete" })));
    expect(root.textContent).toContain("session complete");
  });
});
