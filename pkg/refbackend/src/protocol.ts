/**
 * Wire types shared with the mining client, as zod schemas. The golden
 * fixtures in ../protocol/golden.json are the source of truth; these
 * schemas are strict so a field drifting in either direction fails loudly.
 */

import { createHash } from "node:crypto";
import { z } from "zod";

/** Absent dimensions fall back to the server's generation profile. */
export function generationRequestSchemaFor(defaultDim: number) {
  return z
    .object({
      prompt_text: z.string().min(1, "prompt text is empty"),
      seed: z.number().int().nonnegative(),
      width: z.number().int().positive().default(defaultDim),
      height: z.number().int().positive().default(defaultDim),
      steps: z.number().int().positive().default(50),
      guidance: z.number().positive().default(7.5),
      want_attention: z.boolean().default(false),
      want_features: z.boolean().default(false),
    })
    .strict();
}

export const generationRequestSchema = generationRequestSchemaFor(768);

export type GenerationRequest = z.infer<typeof generationRequestSchema>;

export const generationResponseSchema = z
  .object({
    image_ref: z.string().min(1),
    backend_tag: z.string().min(1),
    features: z.array(z.number()).optional(),
    attention_map: z.array(z.array(z.number())).optional(),
    aesthetic: z.number().optional(),
  })
  .strict();

export type GenerationResponse = z.infer<typeof generationResponseSchema>;

export const historyTurnSchema = z.object({ q: z.string(), a: z.string() }).strict();

export type HistoryTurn = z.infer<typeof historyTurnSchema>;

export const evalRequestSchema = z
  .object({
    image_ref: z.string().min(1),
    question: z.string().min(1),
    // two-step spatial checks carry at most the two prior turns
    history: z.array(historyTurnSchema).max(2).default([]),
  })
  .strict();

export type EvalRequest = z.infer<typeof evalRequestSchema>;

export const evalResponseSchema = z.object({ answer: z.string() }).strict();

/** The three fields every implementation must serve; extras are additive. */
export const healthResponseSchema = z.object({
  status: z.string(),
  feature_dim: z.number().int().positive(),
  backend_tag: z.string(),
});

export const errorResponseSchema = z
  .object({
    error: z.string(),
    retryable: z.boolean(),
  })
  .strict();

/**
 * Idempotency key: sha256 over the compact JSON array
 * [prompt_text, seed, width, height], first 16 hex characters. Matches the
 * client's Idempotency-Key header and the request_key golden fixture.
 */
export function requestKey(
  promptText: string,
  seed: number,
  width = 768,
  height = 768,
): string {
  const payload = JSON.stringify([promptText, seed, width, height]);
  return createHash("sha256").update(payload, "utf8").digest("hex").slice(0, 16);
}
