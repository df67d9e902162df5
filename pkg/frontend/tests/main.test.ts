// App wiring against a fake service client: session view, decision
// round-trips with optimistic rollback, connection-loss retry, stale
// session refresh, keyboard navigation, and the empty-queue state.

import { afterEach, describe, expect, it } from "vitest";
import { ApiError } from "../src/api.js";
import { App } from "../src/main.js";
import { FakeApi, type FakeApiOptions } from "./fixtures.js";

const live: { app: App; container: HTMLElement }[] = [];

function makeApp(opts: FakeApiOptions = {}): { app: App; api: FakeApi; container: HTMLElement } {
  const container = document.createElement("div");
  document.body.appendChild(container);
  const api = new FakeApi(opts);
  const app = new App(container, api);
  live.push({ app, container });
  return { app, api, container };
}

async function openedApp(opts: FakeApiOptions = {}) {
  const ctx = makeApp(opts);
  await ctx.app.start();
  await ctx.app.openSession("rec");
  return ctx;
}

afterEach(() => {
  for (const { app, container } of live.splice(0)) {
    app.destroy();
    container.remove();
  }
});

function click(el: Element | null): void {
  expect(el).not.toBeNull();
  el!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

function press(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key }));
}

function progressText(container: HTMLElement): string | null | undefined {
  return container.querySelector("[data-role=progress]")?.textContent;
}

describe("session view", () => {
  it("start fills the recording picker", async () => {
    const { app, container } = makeApp();
    await app.start();
    const options = [...container.querySelectorAll("option")];
    expect(options.map((o) => o.getAttribute("value"))).toEqual(["rec"]);
    expect(options[0]?.textContent).toContain("20 epochs");
  });

  it("opening a session draws the timeline with gray overlays", async () => {
    const { container } = await openedApp();
    expect(container.querySelectorAll("g[data-epoch]").length).toBe(20);
    const grays = [...container.querySelectorAll("g.gray")].map((g) =>
      g.getAttribute("data-epoch"),
    );
    expect(grays?.sort()).toEqual(["11", "15", "3"]);
  });

  it("auto-selects the most uncertain epoch and shows its excerpt", async () => {
    const { container } = await openedApp();
    expect(container.querySelector("g.selected")?.getAttribute("data-epoch")).toBe("11");
    expect(container.textContent).toContain("epoch 11");
    // neighbors fetched for transition context
    const epochs = [...container.querySelectorAll("polyline")].map((p) =>
      p.getAttribute("data-epoch"),
    );
    expect(new Set(epochs)).toEqual(new Set(["10", "11", "12"]));
    const buttons = [...container.querySelectorAll("[data-stage]")].map(
      (b) => b.textContent,
    );
    expect(buttons).toEqual(["W", "N1", "N2", "N3", "R"]);
  });

  it("clicking a gray epoch loads that epoch's excerpt", async () => {
    const { app, api, container } = await openedApp();
    click(container.querySelector(`g[data-epoch="15"]`));
    await app.whenIdle();
    expect(container.querySelector("g.selected")?.getAttribute("data-epoch")).toBe("15");
    expect(api.calls).toContain("getEpochSignal 14");
    expect(api.calls).toContain("getEpochSignal 16");
    expect(container.textContent).toContain("epoch 15");
  });

  it("ignores clicks on confident epochs", async () => {
    const { app, container } = await openedApp();
    click(container.querySelector(`g[data-epoch="4"]`));
    await app.whenIdle();
    expect(container.querySelector("g.selected")?.getAttribute("data-epoch")).toBe("11");
  });

  it("notes when a recording has no stored signals", async () => {
    const { api, container } = await openedApp({ hasSignals: false });
    expect(container.textContent).toContain("no signals stored");
    expect(api.calls.some((c) => c.startsWith("getEpochSignal"))).toBe(false);
    // stage buttons still available; decisions do not need the excerpt
    expect(container.querySelectorAll("[data-stage]").length).toBe(5);
  });
});

describe("decisions", () => {
  it("posts the decision, recolors the epoch, and advances", async () => {
    const { app, api, container } = await openedApp();
    click(container.querySelector(`[data-stage="N1"]`));
    await app.whenIdle();
    expect(api.calls).toContain("postDecision 11 N1");
    const g = container.querySelector(`g[data-epoch="11"]`);
    expect(g?.getAttribute("class")).toContain("decided");
    expect(g?.querySelector("rect")?.getAttribute("fill")).toBe("#9ecae1");
    // advanced to the next undecided epoch in queue order
    expect(container.querySelector("g.selected")?.getAttribute("data-epoch")).toBe("3");
    expect(api.calls).toContain("getEpochSignal 3");
  });

  it("shows queue progress like 1/100 after one decision", async () => {
    const gray = Array.from({ length: 100 }, (_, i) => i * 2);
    const { app, container } = await openedApp({ epochCount: 200, grayEpochs: gray });
    expect(progressText(container)).toBe("0/100");
    click(container.querySelector(`[data-stage="W"]`));
    await app.whenIdle();
    expect(progressText(container)).toBe("1/100");
  });

  it("prints the service's updated accuracy verbatim", async () => {
    const { app, api, container } = await openedApp();
    api.accuracySteps = [0.8555555555555556];
    click(container.querySelector(`[data-stage="N1"]`));
    await app.whenIdle();
    const current = container.querySelector("td[data-side=current]");
    expect(current?.textContent).toBe("0.8555555555555556");
  });

  it("rolls back when the service rejects the decision", async () => {
    const { app, api, container } = await openedApp();
    api.failNext = new ApiError(409, "EpochNotGray", "epoch 11 is not gray");
    click(container.querySelector(`[data-stage="N1"]`));
    await app.whenIdle();
    expect(app.state.item(11)?.stage).toBeNull();
    expect(container.querySelector(`g[data-epoch="11"]`)?.getAttribute("class")).not.toContain(
      "decided",
    );
    expect(progressText(container)).toBe("0/3");
    const banner = container.querySelector<HTMLElement>("[data-role=banner]");
    expect(banner?.hidden).toBe(false);
    expect(banner?.textContent).toContain("EpochNotGray");
  });
});

describe("failure handling", () => {
  it("connection loss shows a retry banner and retry resubmits", async () => {
    const { app, api, container } = await openedApp();
    api.failNext = new ApiError(0, "ConnectionLost", "fetch failed");
    click(container.querySelector(`[data-stage="N2"]`));
    await app.whenIdle();

    const banner = container.querySelector<HTMLElement>("[data-role=banner]");
    expect(banner?.hidden).toBe(false);
    expect(banner?.textContent).toContain("connection lost");
    expect(container.querySelector<HTMLElement>("[data-action=retry]")?.hidden).toBe(false);
    expect(app.state.item(11)?.stage).toBeNull(); // rolled back while offline

    click(container.querySelector("[data-action=retry]"));
    await app.whenIdle();
    expect(app.state.item(11)?.stage).toBe("N2");
    expect(banner?.hidden).toBe(true);
    expect(progressText(container)).toBe("1/3");
  });

  it("a stale session is re-fetched from the service", async () => {
    const { app, api, container } = await openedApp();
    // another writer completed the session behind our back
    api.session = { ...api.session!, status: "complete" };
    api.failNext = new ApiError(409, "SessionClosed", "session is complete");
    click(container.querySelector(`[data-stage="N1"]`));
    await app.whenIdle();

    expect(api.calls).toContain("getSession sess-1");
    expect(app.state.status).toBe("complete");
    expect(container.textContent).toContain("session complete");
    const stageBtn = container.querySelector<HTMLButtonElement>("[data-stage]");
    expect(stageBtn?.disabled).toBe(true);
    expect(container.querySelector("[data-role=banner-text]")?.textContent).toContain(
      "stale",
    );
  });

  it("a completed session accepts no further decisions", async () => {
    const { app, api, container } = await openedApp();
    click(container.querySelector("[data-action=complete-session]"));
    await app.whenIdle();
    expect(app.state.status).toBe("complete");
    const before = api.calls.length;
    press("1");
    await app.whenIdle();
    expect(api.calls.length).toBe(before); // guard refused the decision
    expect(container.textContent).toContain("session complete");
  });
});

describe("keyboard navigation", () => {
  it("advances most-uncertain-first and decides with number keys", async () => {
    const { app, api, container } = await openedApp();
    press("j");
    await app.whenIdle();
    expect(app.state.selected).toBe(3); // queue order 11, 3, 15
    press("2");
    await app.whenIdle();
    expect(api.calls).toContain("postDecision 3 N1");
    // snaps back to the most uncertain undecided epoch
    expect(app.state.selected).toBe(11);
    expect(container.querySelector("g.selected")?.getAttribute("data-epoch")).toBe("11");
  });

  it("arrow keys move through the queue and clamp at the ends", async () => {
    const { app } = await openedApp();
    press("ArrowLeft");
    await app.whenIdle();
    expect(app.state.selected).toBe(11); // already at the front
    press("ArrowRight");
    press("ArrowRight");
    press("ArrowRight");
    await app.whenIdle();
    expect(app.state.selected).toBe(15); // clamped at the back
  });

  it("the order toggle switches navigation to chronological", async () => {
    const { app, container } = await openedApp();
    press("o");
    expect(container.querySelector("[data-role=order-label]")?.textContent).toBe(
      "chronological",
    );
    press("j");
    await app.whenIdle();
    expect(app.state.selected).toBe(15); // 11 -> 15 by epoch index
    click(container.querySelector("[data-action=toggle-order]"));
    expect(container.querySelector("[data-role=order-label]")?.textContent).toBe(
      "uncertainty",
    );
  });
});

describe("empty queue and export", () => {
  it("says no gray areas and still exports", async () => {
    const { app, container } = await openedApp({ grayEpochs: [] });
    expect(container.textContent).toContain("no gray areas");
    expect(container.querySelectorAll("[data-stage]").length).toBe(0);
    click(container.querySelector("[data-action=export-session]"));
    await app.whenIdle();
    const panel = container.querySelector<HTMLElement>("[data-panel=export]");
    expect(panel?.hidden).toBe(false);
    expect(panel?.textContent).toContain("epoch,stage,uncertain");
  });

  it("metrics degrade gracefully without a reference hypnogram", async () => {
    const { container } = await openedApp({ hasReference: false });
    expect(container.querySelector(".no-reference")).not.toBeNull();
    expect(progressText(container)).toBe("0/3");
  });
});
