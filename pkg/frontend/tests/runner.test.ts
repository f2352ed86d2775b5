import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import type { InferRequest, InferResponse } from '../src/api';
import { DEBOUNCE_MS, WhatIfRunner } from '../src/runner';
import type { SendFn } from '../src/runner';

function body(tag: string): InferRequest {
  return { evidence: { x: tag }, soft_evidence: {}, queries: ['q'] };
}

function resp(tag: string): InferResponse {
  return {
    model: tag,
    posteriors: { q: { states: ['s'], probabilities: [1] } },
    evidence_probability: 1,
  };
}

interface Call {
  body: InferRequest;
  signal: AbortSignal;
  resolve: (r: InferResponse) => void;
  reject: (e: unknown) => void;
}

/** A send that parks every request until the test settles it. */
function deferredSend(): { calls: Call[]; send: SendFn } {
  const calls: Call[] = [];
  const send: SendFn = (reqBody, signal) =>
    new Promise<InferResponse>((resolve, reject) => {
      calls.push({ body: reqBody, signal, resolve, reject });
    });
  return { calls, send };
}

async function flush(): Promise<void> {
  await Promise.resolve();
  await Promise.resolve();
  await Promise.resolve();
}

describe('WhatIfRunner', () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it('coalesces drafts scheduled inside one debounce window', () => {
    const { calls, send } = deferredSend();
    const runner = new WhatIfRunner(send, () => {}, () => {});
    runner.schedule(body('one'));
    vi.advanceTimersByTime(100);
    runner.schedule(body('two'));
    vi.advanceTimersByTime(100);
    runner.schedule(body('three'));
    vi.advanceTimersByTime(DEBOUNCE_MS - 1);
    expect(calls).toHaveLength(0);
    vi.advanceTimersByTime(1);
    expect(calls).toHaveLength(1);
    expect(calls[0]!.body).toEqual(body('three'));
  });

  it('aborts the in-flight request when a newer draft fires', () => {
    const { calls, send } = deferredSend();
    const runner = new WhatIfRunner(send, () => {}, () => {});
    runner.schedule(body('old'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    expect(calls[0]!.signal.aborted).toBe(false);
    runner.schedule(body('new'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    expect(calls).toHaveLength(2);
    expect(calls[0]!.signal.aborted).toBe(true);
    expect(calls[1]!.signal.aborted).toBe(false);
  });

  it('drops a response that arrives after being superseded', async () => {
    const { calls, send } = deferredSend();
    const results: string[] = [];
    const runner = new WhatIfRunner(send, (r) => results.push(r.model), () => {});
    runner.schedule(body('old'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    runner.schedule(body('new'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    calls[0]!.resolve(resp('old'));
    await flush();
    expect(results).toEqual([]);
    calls[1]!.resolve(resp('new'));
    await flush();
    expect(results).toEqual(['new']);
  });

  it('never reports an aborted request as a failure', async () => {
    const { calls, send } = deferredSend();
    const errors: unknown[] = [];
    const results: string[] = [];
    const runner = new WhatIfRunner(send, (r) => results.push(r.model), (e) => errors.push(e));
    runner.schedule(body('old'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    runner.schedule(body('new'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    calls[0]!.reject(new Error('the fetch was aborted'));
    await flush();
    expect(errors).toEqual([]);
    calls[1]!.resolve(resp('new'));
    await flush();
    expect(results).toEqual(['new']);
  });

  it('reports a failure on the newest request', async () => {
    const { calls, send } = deferredSend();
    const errors: unknown[] = [];
    const runner = new WhatIfRunner(send, () => {}, (e) => errors.push(e));
    runner.schedule(body('only'));
    vi.advanceTimersByTime(DEBOUNCE_MS);
    const boom = new Error('connection refused');
    calls[0]!.reject(boom);
    await flush();
    expect(errors).toEqual([boom]);
  });

  it('runNow sends immediately and cancels any pending schedule', () => {
    const { calls, send } = deferredSend();
    const runner = new WhatIfRunner(send, () => {}, () => {});
    runner.schedule(body('queued'));
    void runner.runNow(body('urgent'));
    expect(calls).toHaveLength(1);
    expect(calls[0]!.body).toEqual(body('urgent'));
    vi.advanceTimersByTime(DEBOUNCE_MS * 4);
    expect(calls).toHaveLength(1);
  });
});
