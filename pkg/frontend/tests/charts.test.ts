import { describe, expect, it } from 'vitest';

import { toVegaLite } from '../src/charts';
import type { ChartSpec } from '../src/types';

const HBAR: ChartSpec = {
  mark: 'bar',
  encoding: {
    x: { field: 'mpg', type: 'quantitative', aggregate: 'mean' },
    y: { field: 'origin', type: 'nominal' },
  },
};

describe('chart adapter', () => {
  it('passes encodings through without modification', () => {
    const doc = toVegaLite(HBAR, []);
    expect(doc.encoding).toBe(HBAR.encoding); // same object, untouched
    expect(doc.encoding.x).toEqual({
      field: 'mpg',
      type: 'quantitative',
      aggregate: 'mean',
    });
  });

  it('maps mark synonyms only', () => {
    expect(toVegaLite({ mark: 'scatter', encoding: {} }, []).mark).toBe('point');
    expect(toVegaLite({ mark: 'histogram', encoding: {} }, []).mark).toBe('bar');
    expect(toVegaLite({ mark: 'box', encoding: {} }, []).mark).toBe('boxplot');
    expect(toVegaLite({ mark: 'line', encoding: {} }, []).mark).toBe('line');
  });

  it('injects dataset rows', () => {
    const rows = [{ mpg: 21, origin: 'usa' }];
    const doc = toVegaLite(HBAR, rows);
    expect(doc.data.values).toBe(rows);
  });

  it('keeps bin flags intact', () => {
    const spec: ChartSpec = {
      mark: 'histogram',
      encoding: { x: { field: 'mpg', type: 'quantitative', bin: true } },
    };
    expect(toVegaLite(spec, []).encoding.x.bin).toBe(true);
  });
});
