import type {
  Grade,
  ItemView,
  NextResponse,
  PostRatingResult,
  Progress,
  Rubric,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx answer from the API; `detail` carries the server message. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }

  /** Client-side problem (bad rating, unknown item) vs. outage. */
  get isClientError(): boolean {
    return this.status >= 400 && this.status < 500;
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    // fall through to the status text
  }
  return response.statusText || "request failed";
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  fetchNext(annotator: string): Promise<NextResponse> {
    return this.request<NextResponse>(
      `/api/items/next?annotator=${encodeURIComponent(annotator)}`,
    );
  }

  /** Item ids contain "#", which must never leak into the URL fragment. */
  fetchItem(itemId: string): Promise<ItemView> {
    return this.request<ItemView>(`/api/items/${encodeURIComponent(itemId)}`);
  }

  postRating(
    itemId: string,
    annotator: string,
    rating: Grade,
    comment?: string,
  ): Promise<PostRatingResult> {
    return this.request<PostRatingResult>("/api/ratings", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        item_id: itemId,
        annotator_id: annotator,
        rating,
        comment: comment ?? null,
      }),
    });
  }

  fetchRubric(): Promise<Rubric> {
    return this.request<Rubric>("/api/rubric");
  }

  fetchProgress(annotator?: string): Promise<Progress> {
    const query = annotator ? `?annotator=${encodeURIComponent(annotator)}` : "";
    return this.request<Progress>(`/api/progress${query}`);
  }
}
