import type { Grade } from "./types.js";

// Letter keys and their 1-5 equivalents both rate; space reveals the
// answer. Keys inside text inputs never trigger shortcuts.

const KEY_TO_GRADE: Record<string, Grade> = {
  a: "A",
  b: "B",
  c: "C",
  d: "D",
  e: "E",
  "1": "A",
  "2": "B",
  "3": "C",
  "4": "D",
  "5": "E",
};

export function gradeForKey(key: string): Grade | null {
  return KEY_TO_GRADE[key.toLowerCase()] ?? null;
}

export function isRevealKey(key: string): boolean {
  return key === " " || key === "Spacebar";
}
