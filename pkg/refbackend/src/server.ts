/**
 * HTTP surface for the reference backend: POST /generate, POST /evaluate,
 * GET /health, plus GET /images/<ref> for pixel-level checks. Contract
 * lives in the shared golden fixtures; error bodies are always
 * {error, retryable} and retryable is true only for queue saturation.
 */

import express, { type Express, type NextFunction, type Request, type Response } from "express";

import type { Generated } from "./model.js";
import { ReferenceModel } from "./model.js";
import {
  evalRequestSchema,
  generationRequestSchemaFor,
  requestKey,
  type GenerationRequest,
  type GenerationResponse,
} from "./protocol.js";
import { BuiltinVlm, type Vlm } from "./vlm.js";

/** What the server needs from a generator; ReferenceModel satisfies it. */
export interface GeneratorLike {
  readonly featureDim: number;
  readonly attentionShape: [number, number];
  generate(req: GenerationRequest): Generated | Promise<Generated>;
}

export interface ServerConfig {
  /** Square generation profile; absent request dims default to this. */
  profile?: 768 | 512;
  backendTag?: string;
  /** Admitted-but-unfinished request limit; beyond it /generate returns 503. */
  maxConcurrency?: number;
  /** When set, every route requires Authorization: Bearer <token>. */
  authToken?: string;
  model?: GeneratorLike;
  vlm?: Vlm;
}

class QueueSaturated extends Error {}

/**
 * One generation in flight at a time; a bounded number may wait. The model
 * owns a single device, so admitting more would only hide queueing time.
 */
class SerialQueue {
  private pending = 0;
  private tail: Promise<unknown> = Promise.resolve();

  constructor(private readonly limit: number) {}

  run<T>(fn: () => T | Promise<T>): Promise<T> {
    if (this.pending >= this.limit) {
      return Promise.reject(new QueueSaturated("generation queue saturated"));
    }
    this.pending++;
    const next = this.tail.then(fn);
    this.tail = next.catch(() => undefined).finally(() => {
      this.pending--;
    });
    return next;
  }
}

interface StoredImage {
  png: Buffer;
  generated: Generated;
}

export function createServer(config: ServerConfig = {}): Express {
  const profile = config.profile ?? 768;
  const backendTag = config.backendTag ?? "reference";
  const model = config.model ?? new ReferenceModel("unet-sd21");
  const vlm = config.vlm ?? new BuiltinVlm();
  const queue = new SerialQueue(config.maxConcurrency ?? 4);
  const requestSchema = generationRequestSchemaFor(profile);

  const images = new Map<string, StoredImage>();
  const replies = new Map<string, GenerationResponse>();

  const app = express();
  app.use(express.json({ limit: "4mb" }));

  if (config.authToken) {
    const expected = `Bearer ${config.authToken}`;
    app.use((req: Request, res: Response, next: NextFunction) => {
      if (req.headers.authorization !== expected) {
        res.status(401).json({ error: "missing or bad bearer token", retryable: false });
        return;
      }
      next();
    });
  }

  app.get("/health", (_req: Request, res: Response) => {
    res.json({
      status: "ok",
      feature_dim: model.featureDim,
      backend_tag: backendTag,
      attention_shape: model.attentionShape,
      max_concurrency: config.maxConcurrency ?? 4,
    });
  });

  app.post("/generate", (req: Request, res: Response) => {
    const parsed = requestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({
        error: parsed.error.issues[0]?.message ?? "bad request",
        retryable: false,
      });
      return;
    }
    const gen = parsed.data;
    const key = requestKey(gen.prompt_text, gen.seed, gen.width, gen.height);
    const claimed = req.headers["idempotency-key"];
    if (typeof claimed === "string" && claimed !== key) {
      res.status(400).json({
        error: "Idempotency-Key does not match the request body",
        retryable: false,
      });
      return;
    }

    // replay identical requests from the reply cache without re-entering
    // the queue; flags change the response shape, so they key it too
    const replayKey = `${key}:${gen.steps}:${gen.guidance}:${gen.want_attention}:${gen.want_features}`;
    const cached = replies.get(replayKey);
    if (cached) {
      res.json(cached);
      return;
    }

    queue
      .run(() => model.generate(gen))
      .then((generated) => {
        const ref = `ref:${key}`;
        images.set(ref, { png: generated.png, generated });
        const reply: GenerationResponse = {
          image_ref: ref,
          backend_tag: backendTag,
          aesthetic: generated.aesthetic,
        };
        if (gen.want_features && generated.features) {
          reply.features = generated.features;
        }
        if (gen.want_attention && generated.attentionMap) {
          reply.attention_map = generated.attentionMap;
        }
        replies.set(replayKey, reply);
        res.json(reply);
      })
      .catch((err: unknown) => {
        if (err instanceof QueueSaturated) {
          res.status(503).json({ error: err.message, retryable: true });
          return;
        }
        // a model fault is not transient; the client must not retry into it
        const message = err instanceof Error ? err.message : String(err);
        res.status(500).json({ error: `generation failed: ${message}`, retryable: false });
      });
  });

  app.post("/evaluate", (req: Request, res: Response) => {
    const parsed = evalRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({
        error: parsed.error.issues[0]?.message ?? "bad request",
        retryable: false,
      });
      return;
    }
    const { image_ref, question, history } = parsed.data;
    const stored = images.get(image_ref);
    if (!stored) {
      res.status(404).json({ error: `unknown image_ref ${image_ref}`, retryable: false });
      return;
    }
    Promise.resolve(vlm.answer(stored.generated.scene, question, history))
      .then((answer) => res.json({ answer }))
      .catch((err: unknown) => {
        const message = err instanceof Error ? err.message : String(err);
        res.status(500).json({ error: `evaluation failed: ${message}`, retryable: false });
      });
  });

  app.get("/images/:ref", (req: Request, res: Response) => {
    const stored = images.get(req.params.ref);
    if (!stored) {
      res.status(404).json({ error: `unknown image_ref ${req.params.ref}`, retryable: false });
      return;
    }
    res.type("image/png").send(stored.png);
  });

  app.use((_req: Request, res: Response) => {
    res.status(404).json({ error: "no such route", retryable: false });
  });

  // malformed JSON bodies land here via express.json
  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    res.status(400).json({ error: `invalid request body: ${err.message}`, retryable: false });
  });

  return app;
}
