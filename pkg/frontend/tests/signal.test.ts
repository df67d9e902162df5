// Signal excerpt rendering: one polyline per channel per segment, the
// flagged epoch shaded, boundary epochs without a missing neighbor, and
// stride decimation for long traces.

import { describe, expect, it } from "vitest";
import { renderSignalExcerpt } from "../src/signal.js";
import { FakeApi } from "./fixtures.js";

async function excerptFor(epoch: number, opts: { samplesPerEpoch?: number } = {}) {
  const api = new FakeApi({ epochCount: 20, ...opts });
  const prev = epoch > 0 ? await api.getEpochSignal("rec", epoch - 1) : null;
  const center = await api.getEpochSignal("rec", epoch);
  const next = epoch < 19 ? await api.getEpochSignal("rec", epoch + 1) : null;
  return { prev, center, next };
}

function mount(svg: string): HTMLElement {
  const div = document.createElement("div");
  div.innerHTML = svg;
  return div;
}

describe("renderSignalExcerpt", () => {
  it("draws each channel across the three segments", async () => {
    const root = mount(renderSignalExcerpt(await excerptFor(11)));
    const lines = [...root.querySelectorAll("polyline")];
    expect(lines.length).toBe(6); // 2 channels x 3 segments
    expect(lines.map((l) => l.getAttribute("data-epoch"))).toEqual([
      "10", "11", "12", "10", "11", "12",
    ]);
    const labels = [...root.querySelectorAll("text")].map((t) => t.textContent);
    expect(labels).toContain("EEG F3");
    expect(labels).toContain("EEG C4");
    expect(labels.some((t) => t?.includes("(epoch 11)"))).toBe(true);
  });

  it("shades the flagged epoch's span in the middle", async () => {
    const root = mount(renderSignalExcerpt(await excerptFor(11)));
    const shade = root.querySelector("rect.epoch-shade");
    expect(shade?.getAttribute("x")).toBe("320"); // middle third of 960
    expect(shade?.getAttribute("width")).toBe("320");
  });

  it("handles the first epoch with no previous neighbor", async () => {
    const root = mount(renderSignalExcerpt(await excerptFor(0)));
    const lines = [...root.querySelectorAll("polyline")];
    expect(lines.length).toBe(4); // 2 channels x 2 segments
    const shade = root.querySelector("rect.epoch-shade");
    expect(shade?.getAttribute("x")).toBe("0"); // flagged epoch is leftmost
    expect(shade?.getAttribute("width")).toBe("480");
  });

  it("handles the last epoch with no next neighbor", async () => {
    const root = mount(renderSignalExcerpt(await excerptFor(19)));
    expect(root.querySelectorAll("polyline").length).toBe(4);
    const shade = root.querySelector("rect.epoch-shade");
    expect(shade?.getAttribute("x")).toBe("480"); // flagged epoch is rightmost
  });

  it("strides long traces down to a bounded point count", async () => {
    const root = mount(
      renderSignalExcerpt(await excerptFor(11, { samplesPerEpoch: 9600 })),
    );
    for (const line of root.querySelectorAll("polyline")) {
      const points = (line.getAttribute("points") ?? "").split(" ");
      expect(points.length).toBeLessThanOrEqual(1920);
      expect(points.length).toBeGreaterThan(100);
    }
  });

  it("never emits NaN coordinates, even for flat signals", () => {
    const flat = {
      schema_version: 1,
      recording_id: "rec",
      epoch: 5,
      epoch_count: 10,
      fs: 64,
      channels: [{ label: "EEG F3", samples: [0, 0, 0, 0] }],
    };
    const svg = renderSignalExcerpt({ prev: null, center: flat, next: null });
    expect(svg).not.toContain("NaN");
  });
});
