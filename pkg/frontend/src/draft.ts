/**
 * Evidence drafts: what the analyst has set on each variable.
 *
 * A variable is either untouched (absent from the map), pinned to a hard
 * state, or carrying a soft likelihood vector from the sliders. The draft
 * serializes exactly to the service's request schema and back.
 */

import type { InferRequest, ModelInfo } from './api';

export interface HardEntry {
  kind: 'hard';
  state: string;
}

export interface SoftEntry {
  kind: 'soft';
  weights: number[];
}

export type EvidenceEntry = HardEntry | SoftEntry;

export interface EvidenceDraft {
  entries: Record<string, EvidenceEntry>;
}

export function emptyDraft(): EvidenceDraft {
  return { entries: {} };
}

/** Problems that would make the service reject the draft; [] when clean. */
export function validateDraft(draft: EvidenceDraft, model: ModelInfo): string[] {
  const problems: string[] = [];
  const byId = new Map(model.variables.map((v) => [v.id, v]));
  for (const [variable, entry] of Object.entries(draft.entries)) {
    const info = byId.get(variable);
    if (!info) {
      problems.push(`unknown variable ${variable}`);
      continue;
    }
    if (entry.kind === 'hard') {
      if (!info.states.includes(entry.state)) {
        problems.push(`${variable}: no state named ${entry.state}`);
      }
    } else {
      if (entry.weights.length !== info.states.length) {
        problems.push(
          `${variable}: ${entry.weights.length} weights for ${info.states.length} states`,
        );
      }
      if (entry.weights.some((w) => w < 0 || !Number.isFinite(w))) {
        problems.push(`${variable}: weights must be finite and nonnegative`);
      }
      if (!entry.weights.some((w) => w > 0)) {
        problems.push(`${variable}: at least one weight must be positive`);
      }
    }
  }
  return problems;
}

/** Serialize to the exact request body the service expects. */
export function toRequestBody(draft: EvidenceDraft, queries: string[]): InferRequest {
  const evidence: Record<string, string> = {};
  const soft: Record<string, number[]> = {};
  for (const [variable, entry] of Object.entries(draft.entries)) {
    if (entry.kind === 'hard') evidence[variable] = entry.state;
    else soft[variable] = [...entry.weights];
  }
  return { evidence, soft_evidence: soft, queries: [...queries] };
}

/** Inverse of toRequestBody; the round trip loses nothing. */
export function fromRequestBody(body: InferRequest): { draft: EvidenceDraft; queries: string[] } {
  const entries: Record<string, EvidenceEntry> = {};
  for (const [variable, state] of Object.entries(body.evidence)) {
    entries[variable] = { kind: 'hard', state };
  }
  for (const [variable, weights] of Object.entries(body.soft_evidence)) {
    entries[variable] = { kind: 'soft', weights: [...weights] };
  }
  return { draft: { entries }, queries: [...body.queries] };
}
