// Closed-choice widgets. The options here are the whole vocabulary the
// rating and evaluation features accept; nothing is computed client-side.

import type { Taxonomy } from "./types.js";

export interface ScaleOption {
  label: string;
  value: number;
}

// 3-point article quality scale.
export const QUALITY_OPTIONS: ScaleOption[] = [
  { label: "Low", value: 1 },
  { label: "Medium", value: 2 },
  { label: "High", value: 3 },
];

// 3-point topic-familiarity scale.
export const FAMILIARITY_OPTIONS: ScaleOption[] = [
  { label: "Low", value: 1 },
  { label: "Moderate", value: 2 },
  { label: "Expert", value: 3 },
];

// Evaluation scale one: is this a review/survey article at all?
export const EVALUATION_VERDICTS = [
  { label: "Review/survey article", value: true },
  { label: "Not review/survey article", value: false },
] as const;

export interface PathOption {
  fieldId: string;
  subfieldId: string;
  label: string;
}

// Evaluation scale two: every field/sub-field path of the area's taxonomy.
export function pathOptions(taxonomy: Taxonomy): PathOption[] {
  const options: PathOption[] = [];
  for (const field of taxonomy.fields) {
    for (const subfield of field.subfields) {
      options.push({
        fieldId: field.field_id,
        subfieldId: subfield.subfield_id,
        label: `${field.name} / ${subfield.name}`,
      });
    }
  }
  return options;
}

/**
 * Scores are server-rendered strings and pass through verbatim; the client
 * never formats or recomputes them.
 */
export function displayScore(scoreDisplay: string | null, ratingCount: number): string {
  if (scoreDisplay === null) {
    return "no ratings yet";
  }
  return `${scoreDisplay}% (${ratingCount} rating${ratingCount === 1 ? "" : "s"})`;
}
