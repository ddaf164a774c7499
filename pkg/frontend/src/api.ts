// Thin REST client. Errors carry the service body verbatim so the UI can
// surface it unchanged in the banner.

import type {
  RecommendQuery,
  RecommendationsResponse,
  ServiceError,
  UploadResponse,
} from './types';

export class ApiError extends Error {
  readonly status: number;
  readonly body: ServiceError;

  constructor(status: number, body: ServiceError) {
    super(`${body.error}: ${body.detail}`);
    this.status = status;
    this.body = body;
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let body: ServiceError;
  try {
    body = (await response.json()) as ServiceError;
  } catch {
    body = { error: `HTTP ${response.status}`, detail: await response.text() };
  }
  throw new ApiError(response.status, body);
}

export class ServiceClient {
  constructor(private readonly baseUrl: string = '') {}

  async uploadDataset(content: string | Blob): Promise<UploadResponse> {
    const response = await fetch(`${this.baseUrl}/datasets`, {
      method: 'POST',
      body: content,
    });
    return parseOrThrow<UploadResponse>(response);
  }

  async recommendations(
    datasetId: string,
    query: RecommendQuery,
    signal?: AbortSignal,
  ): Promise<RecommendationsResponse> {
    const response = await fetch(
      `${this.baseUrl}/datasets/${encodeURIComponent(datasetId)}/recommendations`,
      {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(query),
        signal,
      },
    );
    return parseOrThrow<RecommendationsResponse>(response);
  }

  async configs(): Promise<{ configs: { id: string; mark: string }[] }> {
    const response = await fetch(`${this.baseUrl}/configs`);
    return parseOrThrow<{ configs: { id: string; mark: string }[] }>(response);
  }

  async health(): Promise<{ status: string }> {
    const response = await fetch(`${this.baseUrl}/health`);
    return parseOrThrow<{ status: string }>(response);
  }
}
