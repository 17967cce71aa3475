/**
 * Thin fetch wrapper over the review service /v1 endpoints.
 *
 * Knows nothing about the DOM; the round-trip tests drive it directly
 * under node. Non-2xx responses become ApiError with the server's
 * detail string, so callers can branch on status (409 lease conflicts,
 * 404 unknown items) without parsing bodies themselves.
 */
import {
  enqueueResponseSchema,
  itemDetailSchema,
  queueNextSchema,
  statsSchema,
  verdictResponseSchema,
} from "./wire.js";
import type {
  ItemDetail,
  QueueNext,
  Stats,
  VerdictBody,
  VerdictResponse,
} from "./wire.js";

/** Anything with zod's parse shape; keeps schema input/output generics out of the call sites. */
interface Parser<T> {
  parse(data: unknown): T;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly path: string,
  ) {
    super(`${path} -> ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class ReviewApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(
    path: string,
    schema: Parser<T>,
    init?: RequestInit,
  ): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response), path);
    }
    return schema.parse(await response.json());
  }

  /** Lease the oldest pending item for this reviewer. */
  nextItem(reviewer: string): Promise<QueueNext> {
    const query = new URLSearchParams({ reviewer });
    return this.request(`/v1/queue/next?${query}`, queueNextSchema);
  }

  submitVerdict(body: VerdictBody): Promise<VerdictResponse> {
    return this.request("/v1/verdict", verdictResponseSchema, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getItem(qaId: string): Promise<ItemDetail> {
    return this.request(`/v1/items/${encodeURIComponent(qaId)}`, itemDetailSchema);
  }

  stats(): Promise<Stats> {
    return this.request("/v1/stats", statsSchema);
  }

  /** Annotator integration: push regenerated or fresh items. */
  async enqueue(items: Array<Record<string, unknown>>): Promise<number> {
    const parsed = await this.request("/v1/enqueue", enqueueResponseSchema, {
      method: "POST",
      body: JSON.stringify({ items }),
    });
    return parsed.enqueued;
  }

  /** Accepted items as ndjson text plus the count header. */
  async exportAccepted(): Promise<{ count: number; body: string }> {
    const response = await fetch(`${this.baseUrl}/v1/export/accepted`);
    if (!response.ok) {
      throw new ApiError(
        response.status,
        await readDetail(response),
        "/v1/export/accepted",
      );
    }
    const count = Number(response.headers.get("x-accepted-count") ?? "0");
    return { count, body: await response.text() };
  }

  reopen(qaId: string, actor: string, reason: string): Promise<VerdictResponse> {
    return this.request("/v1/reopen", verdictResponseSchema, {
      method: "POST",
      body: JSON.stringify({ qa_id: qaId, actor, reason }),
    });
  }
}
