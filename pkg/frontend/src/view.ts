/**
 * Pure view-model layer: service responses in, render-ready structures out.
 * Percentages are rounded to one decimal place, so any rendered number sits
 * within 0.1% of the response value it came from.
 */

import type { InferResponse } from './api';

export interface BarView {
  state: string;
  /** verbatim response probability, untouched */
  probability: number;
  /** rendered text, e.g. "87.3%" */
  pctText: string;
  /** bar width in percent for the style attribute */
  widthPct: number;
}

export interface VariableView {
  variable: string;
  bars: BarView[];
}

export interface PosteriorViewModel {
  posteriors: VariableView[];
  evidenceProbability: number;
  /** matches the CLI's printed form to the last digit */
  evidenceBadge: string;
}

export interface Snapshot {
  label: string;
  view: PosteriorViewModel;
}

export function formatPct(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

/** Six decimal places, the same formatting the CLI prints. */
export function formatProbability(p: number): string {
  return p.toFixed(6);
}

export function buildView(response: InferResponse): PosteriorViewModel {
  const posteriors: VariableView[] = Object.entries(response.posteriors).map(
    ([variable, block]) => ({
      variable,
      bars: block.states.map((state, i) => {
        const p = block.probabilities[i] ?? 0;
        return {
          state,
          probability: p,
          pctText: formatPct(p),
          widthPct: p * 100,
        };
      }),
    }),
  );
  return {
    posteriors,
    evidenceProbability: response.evidence_probability,
    evidenceBadge: `P(evidence) = ${formatProbability(response.evidence_probability)}`,
  };
}

/**
 * Pin the current result for side-by-side comparison. Slots are immutable:
 * pinning returns a new frozen list and never mutates what was passed in.
 */
export function pinSnapshot(
  slots: readonly Snapshot[],
  view: PosteriorViewModel,
  label: string,
): readonly Snapshot[] {
  const snapshot: Snapshot = Object.freeze({ label, view });
  return Object.freeze([...slots, snapshot]);
}
