/**
 * DOM wiring for the diagnosis panel: evidence controls on the left,
 * posterior bars on the right, pinned snapshots below for side-by-side
 * comparison. All probability math happens on the service.
 */

import { fetchModels, postInfer, ServiceError } from './api';
import type { InferRequest, ModelInfo } from './api';
import type { EvidenceDraft, EvidenceEntry } from './draft';
import { toRequestBody, validateDraft } from './draft';
import type { PosteriorViewModel, Snapshot } from './view';
import { buildView, pinSnapshot } from './view';
import { WhatIfRunner } from './runner';

const $ = <T extends HTMLElement = HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

let models: ModelInfo[] = [];
let current: ModelInfo | null = null;
let lastView: PosteriorViewModel | null = null;
let snapshots: readonly Snapshot[] = [];

const baseInput = $('#base-url') as HTMLInputElement;
const modelSelect = $('#model-select') as HTMLSelectElement;
const controlsRoot = $('#controls');
const resultsRoot = $('#results');
const snapshotsRoot = $('#snapshots');
const banner = $('#banner');
const statusLine = $('#status');
const pinButton = $('#pin') as HTMLButtonElement;

const params = new URLSearchParams(window.location.search);
baseInput.value = params.get('base') ?? 'http://127.0.0.1:8000';

const runner = new WhatIfRunner(
  (body: InferRequest, signal: AbortSignal) =>
    postInfer(baseInput.value, current!.id, body, signal),
  (response) => {
    lastView = buildView(response);
    statusLine.textContent = '';
    renderResults(lastView, resultsRoot);
    pinButton.disabled = false;
  },
  (error) => {
    if (error instanceof ServiceError && error.status === 409) {
      statusLine.textContent = 'impossible evidence: this combination has probability zero';
    } else {
      statusLine.textContent = error instanceof Error ? error.message : String(error);
    }
  },
);

function showBanner(message: string): void {
  banner.textContent = '';
  banner.append(message + ' ');
  const retry = document.createElement('button');
  retry.textContent = 'retry';
  retry.addEventListener('click', () => void loadModels());
  banner.append(retry);
  banner.hidden = false;
}

async function loadModels(): Promise<void> {
  banner.hidden = true;
  // never leave stale controls behind a failed fetch
  controlsRoot.textContent = '';
  modelSelect.textContent = '';
  current = null;
  try {
    models = await fetchModels(baseInput.value);
  } catch (error) {
    showBanner(error instanceof Error ? error.message : String(error));
    return;
  }
  for (const m of models) {
    const opt = document.createElement('option');
    opt.value = m.id;
    opt.textContent = m.id;
    modelSelect.append(opt);
  }
  if (models.length > 0) selectModel(models[0]!.id);
}

function selectModel(id: string): void {
  current = models.find((m) => m.id === id) ?? null;
  if (!current) return;
  modelSelect.value = id;
  lastView = null;
  snapshots = [];
  pinButton.disabled = true;
  resultsRoot.textContent = '';
  snapshotsRoot.textContent = '';
  renderControls(current);
  queueRun();
}

function renderControls(model: ModelInfo): void {
  controlsRoot.textContent = '';
  for (const variable of model.variables) {
    const group = document.createElement('fieldset');
    group.className = 'control-group';
    group.dataset.variable = variable.id;

    const legend = document.createElement('legend');
    legend.textContent = variable.name;
    group.append(legend);

    const mode = document.createElement('select');
    mode.className = 'mode';
    for (const m of ['untouched', 'hard', 'soft']) {
      const opt = document.createElement('option');
      opt.value = m;
      opt.textContent = m;
      mode.append(opt);
    }
    group.append(mode);

    const hardBox = document.createElement('div');
    hardBox.className = 'hard';
    hardBox.hidden = true;
    for (const state of variable.states) {
      const label = document.createElement('label');
      const radio = document.createElement('input');
      radio.type = 'radio';
      radio.name = `hard-${variable.id}`;
      radio.value = state;
      label.append(radio, state); // state labels verbatim from metadata
      hardBox.append(label);
    }
    group.append(hardBox);

    const softBox = document.createElement('div');
    softBox.className = 'soft';
    softBox.hidden = true;
    for (const state of variable.states) {
      const label = document.createElement('label');
      const slider = document.createElement('input');
      slider.type = 'range';
      slider.min = '0';
      slider.max = '100';
      slider.value = '50';
      slider.dataset.state = state;
      label.append(state, slider);
      softBox.append(label);
    }
    group.append(softBox);

    mode.addEventListener('change', () => {
      hardBox.hidden = mode.value !== 'hard';
      softBox.hidden = mode.value !== 'soft';
      queueRun();
    });
    group.addEventListener('input', queueRun);
    controlsRoot.append(group);
  }
}

/** Read the current draft straight off the DOM. */
function readDraft(): EvidenceDraft {
  const entries: Record<string, EvidenceEntry> = {};
  for (const group of controlsRoot.querySelectorAll<HTMLFieldSetElement>('.control-group')) {
    const variable = group.dataset.variable!;
    const mode = group.querySelector<HTMLSelectElement>('.mode')!.value;
    if (mode === 'hard') {
      const checked = group.querySelector<HTMLInputElement>('.hard input:checked');
      if (checked) entries[variable] = { kind: 'hard', state: checked.value };
    } else if (mode === 'soft') {
      const weights = [...group.querySelectorAll<HTMLInputElement>('.soft input')].map(
        (s) => Number(s.value) / 100,
      );
      entries[variable] = { kind: 'soft', weights };
    }
  }
  return { entries };
}

function queueRun(): void {
  if (!current) return;
  const draft = readDraft();
  const problems = validateDraft(draft, current);
  if (problems.length > 0) {
    statusLine.textContent = problems.join('; ');
    return;
  }
  const queries = current.variables
    .map((v) => v.id)
    .filter((id) => draft.entries[id]?.kind !== 'hard');
  statusLine.textContent = 'querying…';
  runner.schedule(toRequestBody(draft, queries));
}

function renderResults(view: PosteriorViewModel, root: HTMLElement): void {
  root.textContent = '';
  const badge = document.createElement('div');
  badge.className = 'badge';
  badge.textContent = view.evidenceBadge;
  root.append(badge);
  for (const variable of view.posteriors) {
    const section = document.createElement('div');
    section.className = 'posterior';
    const head = document.createElement('h3');
    head.textContent = variable.variable;
    section.append(head);
    for (const bar of variable.bars) {
      const row = document.createElement('div');
      row.className = 'bar-row';
      const name = document.createElement('span');
      name.className = 'bar-label';
      name.textContent = bar.state;
      const track = document.createElement('div');
      track.className = 'bar-track';
      const fill = document.createElement('div');
      fill.className = 'bar-fill';
      fill.style.width = `${bar.widthPct}%`;
      track.append(fill);
      const pct = document.createElement('span');
      pct.className = 'bar-pct';
      pct.textContent = bar.pctText;
      row.append(name, track, pct);
      section.append(row);
    }
    root.append(section);
  }
}

function renderSnapshots(): void {
  snapshotsRoot.textContent = '';
  for (const snap of snapshots) {
    const cell = document.createElement('div');
    cell.className = 'snapshot';
    const head = document.createElement('h3');
    head.textContent = snap.label;
    cell.append(head);
    const body = document.createElement('div');
    renderResults(snap.view, body);
    cell.append(body);
    snapshotsRoot.append(cell);
  }
}

pinButton.addEventListener('click', () => {
  if (!lastView) return;
  snapshots = pinSnapshot(snapshots, lastView, `pin ${snapshots.length + 1}`);
  renderSnapshots();
});
modelSelect.addEventListener('change', () => selectModel(modelSelect.value));
baseInput.addEventListener('change', () => void loadModels());
$('#clear').addEventListener('click', () => {
  if (current) selectModel(current.id); // resets every control to untouched
});

void loadModels();
