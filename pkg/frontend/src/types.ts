// Wire types for the recommendation service's REST API.

export type AttributeType = 'quantitative' | 'nominal' | 'ordinal' | 'temporal';

export interface AttributeSummary {
  name: string;
  type: AttributeType;
  cardinality: number;
  missing: number;
}

export interface UploadResponse {
  dataset_id: string;
  attributes: AttributeSummary[];
  row_count: number;
}

export interface RecommendQuery {
  top_k: number;
  required_attribute_types: AttributeType[];
  required_attributes: string[];
  allowed_marks: string[];
  allowed_aggregates: string[];
}

export interface ChannelEncoding {
  field?: string;
  type?: AttributeType;
  aggregate?: string;
  bin?: boolean;
  value?: string;
}

export interface ChartSpec {
  mark: string;
  encoding: Record<string, ChannelEncoding>;
}

export interface Recommendation {
  rank: number;
  score: number;
  visualization: {
    dataset_id: string;
    attributes: string[];
    config_id: string;
  };
  chart_spec: ChartSpec;
}

export interface RecommendationsResponse {
  dataset_id: string;
  recommendations: Recommendation[];
  empty_reason?: string;
}

export interface ServiceError {
  error: string;
  detail: string;
  bound?: number;
  limit?: number;
}

export function emptyQuery(topK = 10): RecommendQuery {
  return {
    top_k: topK,
    required_attribute_types: [],
    required_attributes: [],
    allowed_marks: [],
    allowed_aggregates: [],
  };
}
