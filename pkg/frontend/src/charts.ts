// Adapter from service chart specs to renderable Vega-Lite documents.
//
// The service contract is the spec: encodings pass through with field, type,
// aggregate and bin untouched. The adapter only maps mark-name synonyms and
// injects the locally parsed dataset rows.

import type { ChartSpec } from './types';

const MARK_SYNONYMS: Record<string, string> = {
  scatter: 'point',
  histogram: 'bar',
  box: 'boxplot',
  pie: 'arc',
};

export interface VegaLiteDocument {
  $schema: string;
  mark: string;
  encoding: ChartSpec['encoding'];
  data: { values: Record<string, unknown>[] };
  width: number;
  height: number;
}

export function toVegaLite(
  spec: ChartSpec,
  rows: Record<string, unknown>[],
  size = { width: 260, height: 180 },
): VegaLiteDocument {
  return {
    $schema: 'https://vega.github.io/schema/vega-lite/v6.json',
    mark: MARK_SYNONYMS[spec.mark] ?? spec.mark,
    encoding: spec.encoding,
    data: { values: rows },
    width: size.width,
    height: size.height,
  };
}

export async function renderChart(
  container: HTMLElement,
  spec: ChartSpec,
  rows: Record<string, unknown>[],
): Promise<void> {
  const { default: vegaEmbed } = await import('vega-embed');
  type EmbedSpec = Parameters<typeof vegaEmbed>[1];
  await vegaEmbed(container, toVegaLite(spec, rows) as EmbedSpec, { actions: false });
}
