import { describe, expect, it } from 'vitest';

import type { InferResponse } from '../src/api';
import { buildView, formatPct, formatProbability, pinSnapshot } from '../src/view';
import type { Snapshot } from '../src/view';

const response: InferResponse = {
  model: 'm',
  posteriors: {
    q: { states: ['low', 'mid', 'high'], probabilities: [0.1234, 0.5551, 0.3215] },
    r: { states: ['no', 'yes'], probabilities: [0.2963, 0.7037] },
  },
  evidence_probability: 0.511566,
};

describe('buildView', () => {
  it('keeps response probabilities verbatim on each bar', () => {
    const view = buildView(response);
    const q = view.posteriors.find((v) => v.variable === 'q')!;
    expect(q.bars.map((b) => b.probability)).toEqual([0.1234, 0.5551, 0.3215]);
    expect(q.bars.map((b) => b.state)).toEqual(['low', 'mid', 'high']);
  });

  it('renders one-decimal percentages whose widths mirror the values', () => {
    const view = buildView(response);
    for (const variable of view.posteriors) {
      for (const bar of variable.bars) {
        expect(bar.pctText).toBe(`${(bar.probability * 100).toFixed(1)}%`);
        expect(bar.widthPct).toBeCloseTo(bar.probability * 100, 10);
      }
    }
  });

  it('labels sum to 100% up to per-bar rounding', () => {
    const view = buildView(response);
    for (const variable of view.posteriors) {
      const total = variable.bars.reduce((acc, bar) => acc + parseFloat(bar.pctText), 0);
      expect(Math.abs(total - 100)).toBeLessThanOrEqual(0.05 * variable.bars.length);
    }
  });

  it('prints the evidence badge with six decimals', () => {
    const view = buildView(response);
    expect(view.evidenceProbability).toBe(0.511566);
    expect(view.evidenceBadge).toBe('P(evidence) = 0.511566');
  });
});

describe('formatting', () => {
  it('formatPct rounds to one decimal', () => {
    expect(formatPct(0.70368)).toBe('70.4%');
    expect(formatPct(0)).toBe('0.0%');
    expect(formatPct(1)).toBe('100.0%');
  });

  it('formatProbability pads to six decimals', () => {
    expect(formatProbability(0.5)).toBe('0.500000');
    expect(formatProbability(1)).toBe('1.000000');
    expect(formatProbability(0.2112211221122112)).toBe('0.211221');
  });
});

describe('pinSnapshot', () => {
  it('appends without mutating the previous slots', () => {
    const first = buildView(response);
    const slots: readonly Snapshot[] = Object.freeze([]);
    const one = pinSnapshot(slots, first, 'pin 1');
    const two = pinSnapshot(one, first, 'pin 2');
    expect(slots).toHaveLength(0);
    expect(one).toHaveLength(1);
    expect(two).toHaveLength(2);
    expect(two.map((s) => s.label)).toEqual(['pin 1', 'pin 2']);
  });

  it('returns frozen slots that refuse later edits', () => {
    const view = buildView(response);
    const pinned = pinSnapshot([], view, 'pin 1');
    expect(Object.isFrozen(pinned)).toBe(true);
    expect(Object.isFrozen(pinned[0])).toBe(true);
    expect(() => (pinned as Snapshot[]).push({ label: 'x', view })).toThrow(TypeError);
    expect(() => {
      (pinned[0] as { label: string }).label = 'renamed';
    }).toThrow(TypeError);
  });
});
