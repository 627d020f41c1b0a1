/** Thin fetch client for the two service endpoints the UI consumes. */

import { AnalyzeResponse, HealthResponse } from "./types.js";

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export async function analyze(
  text: string,
  base = "",
): Promise<AnalyzeResponse> {
  const response = await fetch(`${base}/v1/analyze`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ text }),
  });
  if (!response.ok) {
    throw new ServiceError(response.status, await response.text());
  }
  return (await response.json()) as AnalyzeResponse;
}

export async function health(base = ""): Promise<HealthResponse> {
  const response = await fetch(`${base}/v1/health`);
  if (!response.ok) {
    throw new ServiceError(response.status, await response.text());
  }
  return (await response.json()) as HealthResponse;
}
