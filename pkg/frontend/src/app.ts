// DOM wiring for the exploration loop: upload, constrain, browse.

import { ApiError, ServiceClient } from './api';
import { toRecords } from './csv';
import { renderGallery } from './gallery';
import {
  RequestGate,
  SessionState,
  datasetLoaded,
  debounce,
  galleryLoaded,
  initialState,
  requestFailed,
  requestStarted,
  withQuery,
} from './state';
import type { AttributeType, RecommendQuery } from './types';

const MAX_UPLOAD_BYTES = 20 * 1024 * 1024;
const DEBOUNCE_MS = 250;
const TYPE_CHOICES: AttributeType[] = ['quantitative', 'nominal', 'ordinal', 'temporal'];
const AGGREGATE_CHOICES = ['sum', 'mean', 'bin', 'count'];

export function mountApp(root: HTMLElement, client: ServiceClient): void {
  let state: SessionState = initialState();
  let rows: Record<string, unknown>[] = [];
  let marks: string[] = [];
  const gate = new RequestGate();

  root.innerHTML = `
    <header>
      <h1>vizrec explorer</h1>
      <label class="upload">
        Upload CSV <input type="file" id="file-input" accept=".csv,text/csv" />
      </label>
    </header>
    <div id="error-banner" class="banner" hidden></div>
    <main>
      <aside id="query-panel" class="disabled">
        <section>
          <h2>Attributes</h2>
          <ul id="attribute-list"></ul>
        </section>
        <section>
          <h2>Attribute types</h2>
          <div id="type-chips"></div>
          <div id="type-buttons"></div>
        </section>
        <section>
          <h2>Chart types</h2>
          <div id="mark-boxes"></div>
        </section>
        <section>
          <h2>Aggregations</h2>
          <div id="aggregate-boxes"></div>
        </section>
        <section>
          <h2>Results <output id="topk-value">10</output></h2>
          <input type="range" id="topk" min="1" max="50" value="10" />
          <button id="clear-constraints">Clear constraints</button>
        </section>
      </aside>
      <section id="gallery-wrap">
        <div id="status" hidden>Loading…</div>
        <div id="empty-state" hidden></div>
        <div id="gallery"></div>
      </section>
    </main>
  `;

  const el = <T extends HTMLElement>(id: string): T =>
    root.querySelector(`#${id}`) as T;
  const banner = el<HTMLDivElement>('error-banner');
  const gallery = el<HTMLDivElement>('gallery');
  const emptyState = el<HTMLDivElement>('empty-state');
  const status = el<HTMLDivElement>('status');

  function showError(message: string | null): void {
    banner.hidden = message === null;
    banner.textContent = message ?? '';
  }

  function render(): void {
    el('query-panel').classList.toggle('disabled', state.datasetId === null);
    showError(state.error);
    status.hidden = !state.loading;
    emptyState.hidden = state.emptyReason === null;
    if (state.emptyReason !== null) {
      emptyState.textContent = `No candidates: ${state.emptyReason}`;
    }
    renderGallery(gallery, state.gallery, rows);
    renderQueryPanel();
  }

  function renderQueryPanel(): void {
    const list = el<HTMLUListElement>('attribute-list');
    list.replaceChildren();
    for (const attr of state.attributes) {
      const item = document.createElement('li');
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.checked = state.query.required_attributes.includes(attr.name);
      box.addEventListener('change', () => {
        const names = box.checked
          ? [...state.query.required_attributes, attr.name]
          : state.query.required_attributes.filter((n) => n !== attr.name);
        updateQuery({ ...state.query, required_attributes: names });
      });
      const label = document.createElement('label');
      label.append(box, ` ${attr.name} `);
      const tag = document.createElement('em');
      tag.textContent = attr.type;
      label.appendChild(tag);
      item.appendChild(label);
      list.appendChild(item);
    }

    const chips = el<HTMLDivElement>('type-chips');
    chips.replaceChildren();
    state.query.required_attribute_types.forEach((type, index) => {
      const chip = document.createElement('button');
      chip.className = 'chip';
      chip.textContent = `${type} ✕`;
      chip.addEventListener('click', () => {
        const types = state.query.required_attribute_types.filter((_, i) => i !== index);
        updateQuery({ ...state.query, required_attribute_types: types });
      });
      chips.appendChild(chip);
    });

    const buttons = el<HTMLDivElement>('type-buttons');
    buttons.replaceChildren();
    for (const type of TYPE_CHOICES) {
      const button = document.createElement('button');
      button.textContent = `+ ${type}`;
      button.addEventListener('click', () =>
        updateQuery({
          ...state.query,
          required_attribute_types: [...state.query.required_attribute_types, type],
        }),
      );
      buttons.appendChild(button);
    }

    renderCheckboxGroup('mark-boxes', marks, state.query.allowed_marks, (values) =>
      updateQuery({ ...state.query, allowed_marks: values }),
    );
    renderCheckboxGroup(
      'aggregate-boxes',
      AGGREGATE_CHOICES,
      state.query.allowed_aggregates,
      (values) => updateQuery({ ...state.query, allowed_aggregates: values }),
    );
  }

  function renderCheckboxGroup(
    id: string,
    choices: string[],
    selected: string[],
    onChange: (values: string[]) => void,
  ): void {
    const wrap = el<HTMLDivElement>(id);
    wrap.replaceChildren();
    for (const choice of choices) {
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.checked = selected.includes(choice);
      box.addEventListener('change', () => {
        onChange(
          box.checked ? [...selected, choice] : selected.filter((v) => v !== choice),
        );
      });
      const label = document.createElement('label');
      label.append(box, ` ${choice}`);
      wrap.appendChild(label);
    }
  }

  const refetch = debounce(() => void fetchGallery(), DEBOUNCE_MS);

  function updateQuery(query: RecommendQuery): void {
    state = withQuery(state, query);
    render();
    refetch();
  }

  async function fetchGallery(): Promise<void> {
    const datasetId = state.datasetId;
    if (datasetId === null) {
      return;
    }
    state = requestStarted(state);
    render();
    const signal = gate.next();
    try {
      const response = await client.recommendations(datasetId, state.query, signal);
      state = galleryLoaded(state, response.recommendations, response.empty_reason ?? null);
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') {
        return; // superseded by a newer request
      }
      state = requestFailed(state, errorText(err));
    }
    render();
  }

  el<HTMLInputElement>('file-input').addEventListener('change', async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) {
      return;
    }
    if (file.size > MAX_UPLOAD_BYTES) {
      state = requestFailed(state, `file exceeds ${MAX_UPLOAD_BYTES / (1024 * 1024)} MB`);
      render();
      return;
    }
    const text = await file.text();
    try {
      const uploaded = await client.uploadDataset(text);
      rows = toRecords(text, uploaded.attributes);
      state = datasetLoaded(state, uploaded.dataset_id, uploaded.attributes, uploaded.row_count);
      render();
      await fetchGallery();
    } catch (err) {
      state = requestFailed(state, errorText(err));
      render();
    }
  });

  el<HTMLInputElement>('topk').addEventListener('input', (event) => {
    const value = Number((event.target as HTMLInputElement).value);
    el<HTMLOutputElement>('topk-value').textContent = String(value);
    updateQuery({ ...state.query, top_k: value });
  });

  el<HTMLButtonElement>('clear-constraints').addEventListener('click', () => {
    updateQuery({
      ...state.query,
      required_attribute_types: [],
      required_attributes: [],
      allowed_marks: [],
      allowed_aggregates: [],
    });
  });

  void client
    .configs()
    .then((vocab) => {
      marks = [...new Set(vocab.configs.map((c) => c.mark))].sort();
      render();
    })
    .catch(() => showError('service unreachable'));

  render();
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.body.error}: ${err.body.detail}`;
  }
  return String(err);
}
