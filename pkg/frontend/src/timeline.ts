// Full-night hypnodensity timeline as a stacked-bar SVG, matching the
// server-emitted figures: one column per epoch, stage probabilities
// stacked bottom-up in canonical order (W at the bottom, R on top),
// semi-transparent gray overlays on queued epochs. A decided epoch is
// recolored as a solid bar of the chosen stage. Heights are plain
// pixel scaling of service-provided probabilities; nothing is computed.

import type { HypnodensityPayload, StageToken } from "./types.js";
import { GRAY_FILL, GRAY_OPACITY, STAGE_FILLS, STAGE_ORDER } from "./types.js";

export interface TimelineOptions {
  gray: Set<number>;
  decided: Map<number, StageToken>;
  selected: number | null;
  height?: number;
}

const BAR_W = 4;

function num(x: number): string {
  const s = x.toFixed(3);
  return s.replace(/\.?0+$/, "");
}

export function renderTimeline(hd: HypnodensityPayload, opts: TimelineOptions): string {
  const n = hd.epoch_count;
  const height = opts.height ?? 120;
  const width = n * BAR_W;
  const parts: string[] = [
    `<svg class="timeline" viewBox="0 0 ${width} ${height}" ` +
      `preserveAspectRatio="none" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (let e = 0; e < n; e++) {
    const probs = hd.probs[e] ?? [];
    const x = e * BAR_W;
    const isGray = opts.gray.has(e);
    const decidedStage = opts.decided.get(e);
    const classes = ["epoch"];
    if (isGray) classes.push("gray");
    if (decidedStage) classes.push("decided");
    if (opts.selected === e) classes.push("selected");
    parts.push(`<g data-epoch="${e}" class="${classes.join(" ")}">`);
    if (decidedStage) {
      parts.push(
        `<rect x="${num(x)}" y="0" width="${BAR_W}" height="${num(height)}" ` +
          `fill="${STAGE_FILLS[decidedStage]}"/>`,
      );
    } else {
      let y = height;
      for (let s = 0; s < STAGE_ORDER.length; s++) {
        const p = probs[s] ?? 0;
        const seg = p * height;
        y -= seg;
        if (seg <= 0) continue;
        parts.push(
          `<rect x="${num(x)}" y="${num(y)}" width="${BAR_W}" height="${num(seg)}" ` +
            `fill="${STAGE_FILLS[STAGE_ORDER[s]!]}"/>`,
        );
      }
      if (isGray) {
        parts.push(
          `<rect x="${num(x)}" y="0" width="${BAR_W}" height="${num(height)}" ` +
            `fill="${GRAY_FILL}" fill-opacity="${GRAY_OPACITY}"/>`,
        );
      }
    }
    if (opts.selected === e) {
      parts.push(
        `<rect x="${num(x)}" y="0" width="${BAR_W}" height="${num(height)}" ` +
          `fill="none" stroke="#111111" stroke-width="1.5" class="cursor"/>`,
      );
    }
    parts.push("</g>");
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderLegend(): string {
  const items = STAGE_ORDER.map(
    (tok) =>
      `<span class="legend-item"><span class="swatch" ` +
      `style="background:${STAGE_FILLS[tok]}"></span>${tok}</span>`,
  );
  items.push(
    `<span class="legend-item"><span class="swatch" ` +
      `style="background:${GRAY_FILL};opacity:${GRAY_OPACITY}"></span>gray area</span>`,
  );
  return `<div class="legend">${items.join("")}</div>`;
}
