// Payload shapes of the review JSON API. These mirror the server's
// response models exactly; the client never mutates quiz content.

export type Grade = "A" | "B" | "C" | "D" | "E";

export const GRADES: readonly Grade[] = ["A", "B", "C", "D", "E"];

export interface OptionView {
  label: string;
  text: string;
}

export interface ItemView {
  item_id: string;
  index: number;
  kind: "mcq" | "saq";
  stem: string;
  options: OptionView[];
  answer: string;
  doc_id: string;
  doc_title: string;
  context: string;
}

export interface RatingDistribution {
  counts: Record<string, number>;
  percentages: Record<string, number>;
  total: number;
}

export interface NextResponse {
  done: boolean;
  item: ItemView | null;
  rated: number;
  total: number;
  distribution: RatingDistribution | null;
}

export interface PostRatingResult {
  recorded: boolean;
  item_id: string;
  rated: number;
  total: number;
}

export interface RubricEntry {
  grade: Grade;
  en: string;
  tr: string;
}

export interface Rubric {
  scale: string;
  ratings: RubricEntry[];
}

export interface Progress {
  total_items: number;
  effective_ratings: number;
  by_annotator: Record<string, number>;
  annotator?: string | null;
  rated?: number | null;
}
