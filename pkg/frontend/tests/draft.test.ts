import { describe, expect, it } from 'vitest';

import type { ModelInfo } from '../src/api';
import { emptyDraft, fromRequestBody, toRequestBody, validateDraft } from '../src/draft';
import type { EvidenceDraft } from '../src/draft';

const model: ModelInfo = {
  id: 'm',
  variables: [
    { id: 'a', name: 'alpha', states: ['a0', 'a1'] },
    { id: 'b', name: 'beta', states: ['b0', 'b1', 'b2'] },
  ],
};

describe('toRequestBody', () => {
  it('serializes an empty draft with all three keys present', () => {
    expect(toRequestBody(emptyDraft(), ['a'])).toEqual({
      evidence: {},
      soft_evidence: {},
      queries: ['a'],
    });
  });

  it('splits hard and soft entries into the right maps', () => {
    const draft: EvidenceDraft = {
      entries: {
        a: { kind: 'hard', state: 'a1' },
        b: { kind: 'soft', weights: [0.2, 0.5, 0.3] },
      },
    };
    expect(toRequestBody(draft, ['a', 'b'])).toEqual({
      evidence: { a: 'a1' },
      soft_evidence: { b: [0.2, 0.5, 0.3] },
      queries: ['a', 'b'],
    });
  });

  it('copies arrays instead of aliasing the draft', () => {
    const weights = [1, 0, 0];
    const queries = ['a'];
    const body = toRequestBody({ entries: { b: { kind: 'soft', weights } } }, queries);
    body.soft_evidence['b']!.push(9);
    body.queries.push('b');
    expect(weights).toEqual([1, 0, 0]);
    expect(queries).toEqual(['a']);
  });
});

describe('round trip', () => {
  it('draft -> request -> draft loses nothing', () => {
    const draft: EvidenceDraft = {
      entries: {
        a: { kind: 'hard', state: 'a0' },
        b: { kind: 'soft', weights: [0, 1, 2.5] },
      },
    };
    const queries = ['b', 'a'];
    const back = fromRequestBody(toRequestBody(draft, queries));
    expect(back.draft).toEqual(draft);
    expect(back.queries).toEqual(queries);
  });

  it('request -> draft -> request is the identity', () => {
    const body = {
      evidence: { a: 'a1' },
      soft_evidence: { b: [0.1, 0.2, 0.7] },
      queries: ['b'],
    };
    const { draft, queries } = fromRequestBody(body);
    expect(toRequestBody(draft, queries)).toEqual(body);
  });
});

describe('validateDraft', () => {
  it('accepts a clean draft', () => {
    const draft: EvidenceDraft = {
      entries: {
        a: { kind: 'hard', state: 'a1' },
        b: { kind: 'soft', weights: [0.5, 0, 0.5] },
      },
    };
    expect(validateDraft(draft, model)).toEqual([]);
  });

  it('flags unknown variables and states', () => {
    expect(
      validateDraft({ entries: { zz: { kind: 'hard', state: 'a0' } } }, model),
    ).toEqual(['unknown variable zz']);
    expect(
      validateDraft({ entries: { a: { kind: 'hard', state: 'nope' } } }, model),
    ).toEqual(['a: no state named nope']);
  });

  it('flags bad soft vectors', () => {
    const short = validateDraft({ entries: { b: { kind: 'soft', weights: [1, 1] } } }, model);
    expect(short).toEqual(['b: 2 weights for 3 states']);

    const negative = validateDraft(
      { entries: { b: { kind: 'soft', weights: [-1, 1, 1] } } },
      model,
    );
    expect(negative).toEqual(['b: weights must be finite and nonnegative']);

    const nonFinite = validateDraft(
      { entries: { b: { kind: 'soft', weights: [Infinity, 1, 1] } } },
      model,
    );
    expect(nonFinite).toEqual(['b: weights must be finite and nonnegative']);

    const allZero = validateDraft(
      { entries: { b: { kind: 'soft', weights: [0, 0, 0] } } },
      model,
    );
    expect(allZero).toEqual(['b: at least one weight must be positive']);
  });
});
