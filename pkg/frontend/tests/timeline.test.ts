// Stacked-bar timeline: canonical bottom-up stacking, gray overlays,
// decided recoloring, and the selection cursor.

import { describe, expect, it } from "vitest";
import { renderLegend, renderTimeline } from "../src/timeline.js";
import { GRAY_FILL, STAGE_FILLS } from "../src/types.js";
import { makeHypnodensity } from "./fixtures.js";

function mount(svg: string): HTMLElement {
  const div = document.createElement("div");
  div.innerHTML = svg;
  return div;
}

function rects(root: HTMLElement, epoch: number): Element[] {
  return [...root.querySelectorAll(`g[data-epoch="${epoch}"] rect`)];
}

const OPTS = { gray: new Set<number>(), decided: new Map(), selected: null };

describe("renderTimeline", () => {
  it("draws one column per epoch inside a proportional viewBox", () => {
    const root = mount(renderTimeline(makeHypnodensity(4, [1]), { ...OPTS, height: 100 }));
    const svg = root.querySelector("svg.timeline");
    expect(svg?.getAttribute("viewBox")).toBe("0 0 16 100");
    expect(svg?.getAttribute("preserveAspectRatio")).toBe("none");
    expect(root.querySelectorAll("g[data-epoch]").length).toBe(4);
  });

  it("stacks probabilities bottom-up in canonical stage order", () => {
    // gray row is [0.4 W, 0.3 N1, 0.3 N2, 0, 0]
    const root = mount(
      renderTimeline(makeHypnodensity(4, [1]), {
        ...OPTS,
        gray: new Set([1]),
        height: 100,
      }),
    );
    const bars = rects(root, 1);
    expect(bars.length).toBe(4); // three stage segments plus the overlay
    const [w, n1, n2] = bars;
    expect(w?.getAttribute("fill")).toBe(STAGE_FILLS.W);
    expect(w?.getAttribute("y")).toBe("60"); // bottom 40% of a 100px column
    expect(w?.getAttribute("height")).toBe("40");
    expect(n1?.getAttribute("fill")).toBe(STAGE_FILLS.N1);
    expect(n1?.getAttribute("y")).toBe("30");
    expect(n2?.getAttribute("fill")).toBe(STAGE_FILLS.N2);
    expect(n2?.getAttribute("y")).toBe("0");
  });

  it("skips zero-probability segments", () => {
    const root = mount(
      renderTimeline(makeHypnodensity(4, [1]), { ...OPTS, height: 100 }),
    );
    // epoch 1 is the gray row but not flagged gray here: N3 and R are 0
    expect(rects(root, 1).length).toBe(3);
  });

  it("overlays queued epochs with semi-transparent gray", () => {
    const root = mount(
      renderTimeline(makeHypnodensity(4, [1]), {
        ...OPTS,
        gray: new Set([1]),
        height: 100,
      }),
    );
    const overlay = rects(root, 1).at(-1);
    expect(overlay?.getAttribute("fill")).toBe(GRAY_FILL);
    expect(overlay?.getAttribute("fill-opacity")).toBe("0.45");
    expect(overlay?.getAttribute("height")).toBe("100");
    expect(root.querySelector(`g[data-epoch="1"]`)?.getAttribute("class")).toContain("gray");
    // non-queued epochs get no overlay
    expect(rects(root, 0).some((r) => r.getAttribute("fill") === GRAY_FILL)).toBe(false);
  });

  it("recolors a decided epoch as one solid bar of the chosen stage", () => {
    const root = mount(
      renderTimeline(makeHypnodensity(4, [1]), {
        ...OPTS,
        gray: new Set([1]),
        decided: new Map([[1, "N2" as const]]),
        height: 100,
      }),
    );
    const bars = rects(root, 1);
    expect(bars.length).toBe(1);
    expect(bars[0]?.getAttribute("fill")).toBe(STAGE_FILLS.N2);
    expect(bars[0]?.getAttribute("height")).toBe("100");
    const cls = root.querySelector(`g[data-epoch="1"]`)?.getAttribute("class");
    expect(cls).toContain("decided");
  });

  it("outlines the selected epoch with a cursor", () => {
    const root = mount(
      renderTimeline(makeHypnodensity(4, [1]), {
        ...OPTS,
        gray: new Set([1]),
        selected: 1,
        height: 100,
      }),
    );
    const cursor = root.querySelector(`g[data-epoch="1"] rect.cursor`);
    expect(cursor?.getAttribute("fill")).toBe("none");
    expect(cursor?.getAttribute("stroke")).toBe("#111111");
    expect(root.querySelector(`g[data-epoch="1"]`)?.getAttribute("class")).toContain(
      "selected",
    );
  });
});

describe("renderLegend", () => {
  it("lists the five stages in canonical order plus the gray marker", () => {
    const root = mount(renderLegend());
    const items = [...root.querySelectorAll(".legend-item")];
    expect(items.map((el) => el.textContent)).toEqual([
      "W",
      "N1",
      "N2",
      "N3",
      "R",
      "gray area",
    ]);
  });
});
