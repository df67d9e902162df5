// Metrics panel. Every number is printed verbatim from the service
// payload (String() of the JSON value); the client neither rounds nor
// recomputes. Baseline = model as staged; current = with the session's
// decisions overlaid.

import type { AgreementDoc, MetricsPayload } from "./types.js";

function row(label: string, baseline: unknown, current: unknown): string {
  return (
    `<tr><th>${label}</th>` +
    `<td data-side="baseline">${String(baseline)}</td>` +
    `<td data-side="current">${String(current)}</td></tr>`
  );
}

function agreementRows(baseline: AgreementDoc, current: AgreementDoc): string {
  return [
    row("accuracy", baseline.accuracy, current.accuracy),
    row("cohen kappa", baseline.cohen_kappa, current.cohen_kappa),
    row("macro F1", baseline.macro_f1, current.macro_f1),
    row("weighted F1", baseline.weighted_f1, current.weighted_f1),
    row("epochs", baseline.n_epochs, current.n_epochs),
  ].join("");
}

export function renderMetrics(m: MetricsPayload): string {
  const progress = `${m.decisions}/${m.queue_length}`;
  const head =
    `<div class="metrics-head">` +
    `<span class="progress" data-role="progress">${progress}</span>` +
    `<span class="status">session ${m.status}</span>` +
    `</div>`;
  if (m.baseline === null || m.current === null) {
    return (
      `<div class="metrics">${head}` +
      `<p class="no-reference">no reference hypnogram for this recording; ` +
      `agreement metrics unavailable</p></div>`
    );
  }
  const retained =
    m.epochs_retained === null
      ? ""
      : `<p class="retained">epochs retained: ` +
        `<span data-role="epochs-retained">${String(m.epochs_retained)}</span></p>`;
  return (
    `<div class="metrics">${head}` +
    `<table class="agreement"><thead>` +
    `<tr><th></th><th>baseline</th><th>current</th></tr></thead><tbody>` +
    agreementRows(m.baseline, m.current) +
    `</tbody></table>${retained}</div>`
  );
}
