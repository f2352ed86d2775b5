/**
 * Debounced what-if execution with single-flight cancellation.
 *
 * Control changes arrive faster than anyone wants to query, so each new
 * draft resets a 300 ms timer; when it fires, any in-flight request is
 * aborted and a fresh one goes out. Responses that lost the race are
 * dropped, so the panel only ever shows the newest draft's numbers.
 */

import type { InferRequest, InferResponse } from './api';

export type SendFn = (body: InferRequest, signal: AbortSignal) => Promise<InferResponse>;

export const DEBOUNCE_MS = 300;

export class WhatIfRunner {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private generation = 0;

  constructor(
    private readonly send: SendFn,
    private readonly onResult: (response: InferResponse, body: InferRequest) => void,
    private readonly onError: (error: unknown) => void,
    private readonly delayMs: number = DEBOUNCE_MS,
  ) {}

  /** Queue a draft; only the last one scheduled inside the window runs. */
  schedule(body: InferRequest): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(body);
    }, this.delayMs);
  }

  /** Run immediately, skipping the debounce window. */
  runNow(body: InferRequest): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire(body);
  }

  private async fire(body: InferRequest): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const generation = ++this.generation;
    try {
      const response = await this.send(body, controller.signal);
      if (generation === this.generation) this.onResult(response, body);
    } catch (error) {
      if (controller.signal.aborted) return; // superseded, not a failure
      if (generation === this.generation) this.onError(error);
    }
  }
}
