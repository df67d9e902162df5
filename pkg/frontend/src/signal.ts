// Signal excerpt for one flagged epoch with its two neighbors for
// transition context. Each channel becomes one polyline; the flagged
// epoch's span is shaded. Only display scaling happens here: samples are
// mapped to pixels channel by channel with a shared min/max, and long
// traces are strided down to a drawable point count.

import type { SignalPayload } from "./types.js";

export interface Excerpt {
  prev: SignalPayload | null;
  center: SignalPayload;
  next: SignalPayload | null;
}

const WIDTH = 960;
const CHANNEL_H = 90;
const GAP = 14;
const MAX_POINTS = 1920;

function num(x: number): string {
  const s = x.toFixed(2);
  return s.replace(/\.?0+$/, "");
}

function polylinePoints(
  samples: number[],
  x0: number,
  span: number,
  top: number,
  lo: number,
  hi: number,
): string {
  const range = hi - lo || 1;
  const stride = Math.max(1, Math.ceil(samples.length / MAX_POINTS));
  const pts: string[] = [];
  for (let i = 0; i < samples.length; i += stride) {
    const x = x0 + (span * i) / Math.max(samples.length - 1, 1);
    const y = top + CHANNEL_H - ((samples[i]! - lo) / range) * CHANNEL_H;
    pts.push(`${num(x)},${num(y)}`);
  }
  return pts.join(" ");
}

export function renderSignalExcerpt(excerpt: Excerpt): string {
  const { prev, center, next } = excerpt;
  const segments = [prev, center, next].filter(
    (s): s is SignalPayload => s !== null,
  );
  const nSeg = segments.length;
  const segW = WIDTH / nSeg;
  const centerIndex = prev === null ? 0 : 1;
  const channels = center.channels.map((c) => c.label);
  const height = channels.length * (CHANNEL_H + GAP) + GAP + 18;

  const parts: string[] = [
    `<svg class="signal" viewBox="0 0 ${WIDTH} ${height}" ` +
      `xmlns="http://www.w3.org/2000/svg">`,
    `<rect class="epoch-shade" x="${num(centerIndex * segW)}" y="0" ` +
      `width="${num(segW)}" height="${height}" fill="#dbe9f6"/>`,
  ];

  channels.forEach((label, ci) => {
    const top = GAP + ci * (CHANNEL_H + GAP);
    // shared scale across the three segments of one channel
    let lo = Infinity;
    let hi = -Infinity;
    for (const seg of segments) {
      for (const v of seg.channels[ci]?.samples ?? []) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
      }
    }
    if (!isFinite(lo) || !isFinite(hi)) {
      lo = -1;
      hi = 1;
    }
    segments.forEach((seg, si) => {
      const samples = seg.channels[ci]?.samples ?? [];
      parts.push(
        `<polyline data-channel="${label}" data-epoch="${seg.epoch}" ` +
          `fill="none" stroke="#2b4a6f" stroke-width="0.7" ` +
          `points="${polylinePoints(samples, si * segW, segW, top, lo, hi)}"/>`,
      );
    });
    parts.push(
      `<text x="4" y="${num(top + 12)}" font-size="11" ` +
        `font-family="sans-serif" fill="#333">${label}</text>`,
    );
  });

  segments.forEach((seg, si) => {
    const mark = seg.epoch === center.epoch ? ` (epoch ${seg.epoch})` : ` ${seg.epoch}`;
    parts.push(
      `<text x="${num(si * segW + 4)}" y="${height - 4}" font-size="11" ` +
        `font-family="sans-serif" fill="#666">${mark}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("");
}
