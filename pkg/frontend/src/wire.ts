/**
 * Wire types for the review service /v1 API.
 *
 * Every response body is parsed through a zod schema before the rest of
 * the client sees it, so a drifting or misconfigured server fails loudly
 * at the boundary instead of as an undefined somewhere in the UI.
 */
import { z } from "zod";

export const TASKS = ["BP", "CM", "ML", "CI", "RC"] as const;
export const STATUSES = ["pending", "accepted", "rejected", "manual_correction"] as const;
export const PILLARS = [
  "Accuracy",
  "Traceability",
  "Discriminability",
  "CommercialRelevance",
] as const;

export type Pillar = (typeof PILLARS)[number];

export const evidenceSchema = z.object({
  modality: z.enum(["V", "A", "O"]),
  t_start: z.number().int().nonnegative(),
  t_end: z.number().int().positive(),
  excerpt: z.string(),
});

export const qaItemSchema = z.object({
  qa_id: z.string().min(1),
  video_id: z.string().min(1),
  task: z.enum(TASKS),
  difficulty: z.enum(["L1", "L2", "L3", "L4", "L5"]),
  question: z.string(),
  answer: z.string(),
  reasoning: z.string(),
  evidence: z.array(evidenceSchema),
  status: z.enum(STATUSES),
  cycle: z.number().int().min(0).max(3),
  provenance: z.record(z.string()).default({}),
  question_modality: z.enum(["V", "A", "O"]).optional(),
  decisive_modality: z.enum(["V", "A", "O"]).optional(),
});

export const slotSchema = z.object({
  t_start: z.number().int().nonnegative(),
  t_end: z.number().int().positive(),
  alpha: z.string(),
  gamma: z.string(),
  frame_refs: z.array(z.number().int()),
});

export const contextBlockSchema = z.object({
  video_id: z.string(),
  metadata: z.record(z.string()).default({}),
  slots: z.array(slotSchema),
  rendered: z.string(),
});

export const queueNextSchema = z.object({
  item: qaItemSchema.nullable(),
  context: contextBlockSchema.nullable(),
});

export const verdictResponseSchema = z.object({
  qa_id: z.string(),
  status: z.enum(STATUSES),
});

export const historyEntrySchema = z.object({
  decision: z.enum(["accept", "reject"]),
  pillar_flags: z.record(z.boolean()),
  reason: z.string(),
  reviewer: z.string(),
  timestamp: z.number(),
});

export const itemDetailSchema = z.object({
  item: qaItemSchema,
  history: z.array(historyEntrySchema),
});

export const statsSchema = z.object({
  total: z.number().int().nonnegative(),
  by_status: z.record(z.number().int()),
  by_task: z.record(z.number().int()),
  by_cycle: z.record(z.number().int()),
});

export const enqueueResponseSchema = z.object({
  enqueued: z.number().int().nonnegative(),
});

export type QaItem = z.infer<typeof qaItemSchema>;
export type ContextBlock = z.infer<typeof contextBlockSchema>;
export type QueueNext = z.infer<typeof queueNextSchema>;
export type VerdictResponse = z.infer<typeof verdictResponseSchema>;
export type ItemDetail = z.infer<typeof itemDetailSchema>;
export type Stats = z.infer<typeof statsSchema>;

/** Body for POST /v1/verdict; built by the UI, validated by the server. */
export interface VerdictBody {
  qa_id: string;
  decision: "accept" | "reject";
  pillar_flags: Record<Pillar, boolean>;
  reason: string;
  reviewer: string;
}
