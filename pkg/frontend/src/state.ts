// Session state and pure update logic for the exploration loop.
//
// Invariants enforced here: query constraints only reference attributes of
// the loaded dataset, and the gallery is exactly the server's ranked list
// (no client-side re-sorting).

import type {
  AttributeSummary,
  AttributeType,
  Recommendation,
  RecommendQuery,
} from './types';
import { emptyQuery } from './types';

export interface SessionState {
  datasetId: string | null;
  attributes: AttributeSummary[];
  rowCount: number;
  query: RecommendQuery;
  gallery: Recommendation[];
  loading: boolean;
  error: string | null;
  emptyReason: string | null;
}

export function initialState(): SessionState {
  return {
    datasetId: null,
    attributes: [],
    rowCount: 0,
    query: emptyQuery(),
    gallery: [],
    loading: false,
    error: null,
    emptyReason: null,
  };
}

export function datasetLoaded(
  _previous: SessionState,
  datasetId: string,
  attributes: AttributeSummary[],
  rowCount: number,
): SessionState {
  // a new dataset resets the whole session
  return {
    ...initialState(),
    datasetId,
    attributes,
    rowCount,
  };
}

export function withQuery(state: SessionState, query: RecommendQuery): SessionState {
  const known = new Set(state.attributes.map((a) => a.name));
  const requiredAttributes = query.required_attributes.filter((name) => known.has(name));
  return { ...state, query: { ...query, required_attributes: requiredAttributes } };
}

export function requestStarted(state: SessionState): SessionState {
  return { ...state, loading: true, error: null };
}

export function galleryLoaded(
  state: SessionState,
  recommendations: Recommendation[],
  emptyReason: string | null,
): SessionState {
  return {
    ...state,
    loading: false,
    error: null,
    gallery: recommendations,
    emptyReason: recommendations.length === 0 ? emptyReason : null,
  };
}

export function requestFailed(state: SessionState, message: string): SessionState {
  return { ...state, loading: false, error: message, gallery: [], emptyReason: null };
}

export function toggleConstraint<T>(values: T[], value: T): T[] {
  return values.includes(value)
    ? values.filter((v) => v !== value)
    : [...values, value];
}

export function addRequiredType(query: RecommendQuery, type: AttributeType): RecommendQuery {
  return { ...query, required_attribute_types: [...query.required_attribute_types, type] };
}

export function removeRequiredType(query: RecommendQuery, index: number): RecommendQuery {
  const types = query.required_attribute_types.filter((_, i) => i !== index);
  return { ...query, required_attribute_types: types };
}

export function clearConstraints(query: RecommendQuery): RecommendQuery {
  return emptyQuery(query.top_k);
}

/** At most one in-flight request; later edits cancel earlier ones. */
export class RequestGate {
  private controller: AbortController | null = null;

  next(): AbortSignal {
    this.controller?.abort();
    this.controller = new AbortController();
    return this.controller.signal;
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    clearTimeout(timer);
    timer = setTimeout(() => fn(...args), delayMs);
  };
}
