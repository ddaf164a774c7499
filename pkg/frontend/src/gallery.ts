// Ranked gallery rendering: one card per recommendation, in server order.

import { renderChart } from './charts';
import type { Recommendation } from './types';

export function renderGallery(
  container: HTMLElement,
  recommendations: Recommendation[],
  rows: Record<string, unknown>[],
): void {
  container.replaceChildren();
  for (const rec of recommendations) {
    container.appendChild(card(rec, rows));
  }
}

function card(rec: Recommendation, rows: Record<string, unknown>[]): HTMLElement {
  const el = document.createElement('figure');
  el.className = 'chart-card';
  el.dataset.rank = String(rec.rank);
  el.dataset.configId = rec.visualization.config_id;

  const header = document.createElement('figcaption');
  const rank = document.createElement('span');
  rank.className = 'rank';
  rank.textContent = `#${rec.rank}`;
  const score = document.createElement('span');
  score.className = 'score';
  score.title = 'relevance score';
  score.textContent = rec.score.toFixed(3);
  const fields = document.createElement('span');
  fields.className = 'fields';
  fields.textContent = rec.visualization.attributes.join(' × ');
  header.append(rank, fields, score);

  const plot = document.createElement('div');
  plot.className = 'plot';
  el.append(header, plot);
  void renderChart(plot, rec.chart_spec, rows).catch((err) => {
    plot.textContent = `render failed: ${err}`;
  });
  return el;
}
