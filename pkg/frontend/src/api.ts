/**
 * Typed client for the diagnosis service. Every number shown in the UI
 * comes from one of these responses; nothing is computed locally.
 */

export interface VariableInfo {
  id: string;
  name: string;
  states: string[];
}

export interface ModelInfo {
  id: string;
  variables: VariableInfo[];
}

export interface InferRequest {
  evidence: Record<string, string>;
  soft_evidence: Record<string, number[]>;
  queries: string[];
}

export interface PosteriorBlock {
  states: string[];
  probabilities: number[];
}

export interface InferResponse {
  model: string;
  posteriors: Record<string, PosteriorBlock>;
  evidence_probability: number;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === 'string') return body.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return res.statusText;
}

export async function fetchModels(base: string, signal?: AbortSignal): Promise<ModelInfo[]> {
  const res = await fetch(`${base}/models`, { signal });
  if (!res.ok) throw new ServiceError(res.status, await errorDetail(res));
  return (await res.json()) as ModelInfo[];
}

export async function postInfer(
  base: string,
  modelId: string,
  body: InferRequest,
  signal?: AbortSignal,
): Promise<InferResponse> {
  const res = await fetch(`${base}/models/${encodeURIComponent(modelId)}/infer`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
    signal,
  });
  if (!res.ok) throw new ServiceError(res.status, await errorDetail(res));
  return (await res.json()) as InferResponse;
}
