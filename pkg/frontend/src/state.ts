import { ApiError, ReviewApi } from "./api.js";
import type { Grade, ItemView, RatingDistribution } from "./types.js";

// All review state lives on the server; this machine only mirrors the
// current item and in-flight status, so a page reload reconstructs the
// exact same place in the queue.

export type Phase =
  | { kind: "loading" }
  | {
      kind: "reviewing";
      item: ItemView;
      rated: number;
      total: number;
      answerRevealed: boolean;
      submitting: boolean;
      inlineError: string | null;
    }
  | { kind: "done"; total: number; distribution: RatingDistribution | null }
  | { kind: "failed"; message: string };

export class ReviewSession {
  phase: Phase = { kind: "loading" };
  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: ReviewApi,
    readonly annotator: string,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private setPhase(phase: Phase): void {
    this.phase = phase;
    this.emit();
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  /** Fetch the next unrated item; network failures keep a retry path. */
  async loadNext(): Promise<void> {
    this.setPhase({ kind: "loading" });
    try {
      const next = await this.api.fetchNext(this.annotator);
      if (next.done || next.item === null) {
        this.setPhase({
          kind: "done",
          total: next.total,
          distribution: next.distribution,
        });
      } else {
        this.setPhase({
          kind: "reviewing",
          item: next.item,
          rated: next.rated,
          total: next.total,
          answerRevealed: false,
          submitting: false,
          inlineError: null,
        });
      }
    } catch (error) {
      this.setPhase({ kind: "failed", message: describe(error) });
    }
  }

  revealAnswer(): void {
    if (this.phase.kind !== "reviewing" || this.phase.answerRevealed) return;
    this.setPhase({ ...this.phase, answerRevealed: true });
  }

  /**
   * Submit a rating for the current item and advance.
   *
   * Returns false when ignored: not reviewing, or a submission is
   * already in flight (double-press guard). A 4xx answer keeps the
   * item on screen with an inline error; only success advances.
   */
  async submitRating(rating: Grade): Promise<boolean> {
    if (this.phase.kind !== "reviewing" || this.phase.submitting) {
      return false;
    }
    const current = this.phase;
    this.setPhase({ ...current, submitting: true, inlineError: null });
    try {
      await this.api.postRating(current.item.item_id, this.annotator, rating);
    } catch (error) {
      if (error instanceof ApiError && error.isClientError) {
        this.setPhase({ ...current, submitting: false, inlineError: error.detail });
      } else {
        this.setPhase({ kind: "failed", message: describe(error) });
      }
      return false;
    }
    await this.loadNext();
    return true;
  }
}

function describe(error: unknown): string {
  if (error instanceof Error) return error.message;
  return String(error);
}
