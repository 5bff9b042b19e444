/**
 * The reference generation model. Not a neural network; a deterministic
 * stand-in with the same observable contract as one:
 *
 *  - a named parameter tree shaped like the real backbones (unet blocks or
 *    transformer blocks with q/k/v/out attention projections), which the
 *    fine-tune selector walks by name;
 *  - initial latent noise derived from the request seed and nothing else;
 *  - a denoising loop whose per-step, per-layer cross-attention on the
 *    object token is captured and averaged into one map;
 *  - an actual rendered image (objects drawn as blobs), so the judging
 *    model answers from what is in the picture, not from the prompt.
 */

import { encodePng } from "./png.js";
import type { GenerationRequest } from "./protocol.js";
import { gaussian, hash01, streamOf } from "./rng.js";

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

export type ParamTree = Map<string, Tensor>;

export type ModelFamily = "unet-sd21" | "transformer-pixart";

export const EMBED_DIM = 8;

const UNET_BLOCKS = [
  "down_blocks.0",
  "down_blocks.1",
  "down_blocks.2",
  "mid_block",
  "up_blocks.0",
  "up_blocks.1",
  "up_blocks.2",
];

const PIXART_BLOCKS = ["blocks.0", "blocks.1", "blocks.2", "blocks.3"];

/** Mid-resolution attention layers captured by default. */
export const DEFAULT_ATTENTION_LAYERS: Record<ModelFamily, string[]> = {
  "unet-sd21": ["down_blocks.2", "mid_block", "up_blocks.0"],
  "transformer-pixart": ["blocks.1", "blocks.2"],
};

function newTensor(name: string, rows: number, cols: number): Tensor {
  const draw = gaussian(streamOf(`init:${name}`));
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) data[i] = Math.fround(draw() * 0.2);
  return { shape: [rows, cols], data };
}

export function buildParameters(family: ModelFamily): ParamTree {
  const params: ParamTree = new Map();
  const d = EMBED_DIM;
  if (family === "unet-sd21") {
    for (const block of UNET_BLOCKS) {
      for (const proj of ["to_q", "to_k", "to_v", "to_out"]) {
        const name = `${block}.attentions.0.${proj}.weight`;
        params.set(name, newTensor(name, d, d));
      }
      const conv = `${block}.resnets.0.conv.weight`;
      params.set(conv, newTensor(conv, d, d));
    }
    return params;
  }
  if (family === "transformer-pixart") {
    for (const block of PIXART_BLOCKS) {
      for (const proj of ["q_proj", "k_proj", "v_proj", "out_proj"]) {
        const name = `${block}.attn.${proj}.weight`;
        params.set(name, newTensor(name, d, d));
      }
      for (const fc of ["fc1", "fc2"]) {
        const name = `${block}.mlp.${fc}.weight`;
        params.set(name, newTensor(name, d, d));
      }
    }
    const head = "final_layer.proj.weight";
    params.set(head, newTensor(head, d, d));
    return params;
  }
  throw new Error(`unknown model family ${family}`);
}

export function embedText(text: string, dim = EMBED_DIM): Float32Array {
  const draw = gaussian(streamOf(`embed:${text}`));
  const out = new Float32Array(dim);
  for (let i = 0; i < dim; i++) out[i] = draw();
  return out;
}

function matVec(w: Tensor, x: Float32Array): Float32Array {
  const [rows, cols] = w.shape;
  const out = new Float32Array(rows);
  for (let r = 0; r < rows; r++) {
    let acc = 0;
    for (let c = 0; c < cols; c++) acc += w.data[r * cols + c] * x[c];
    out[r] = acc;
  }
  return out;
}

function dot(a: Float32Array, b: Float32Array): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += a[i] * b[i];
  return acc;
}

// -- prompt understanding (loose; the judge reads the scene, not the prompt)

const NUMBER_WORDS: Record<string, number> = {
  a: 1, an: 1, one: 1, two: 2, three: 3, four: 4,
  five: 5, six: 6, seven: 7, eight: 8, nine: 9, ten: 10,
};

const RELATION_PHRASES = [
  "on the top of",
  "on the left of",
  "on the right of",
  "under",
];

export interface PromptFields {
  kind: "numerical" | "spatial" | "multi";
  counts: Map<string, number>; // noun as written -> asked count
  subject?: string;
  object?: string;
  relationPhrase?: string;
}

export function parsePromptLoosely(text: string): PromptFields {
  const head = text.split(", ")[0];
  for (const phrase of RELATION_PHRASES) {
    const m = head.match(new RegExp(`^An? (\\w+) ${phrase} an? (\\w+)$`));
    if (m) {
      return {
        kind: "spatial",
        counts: new Map([[m[1].toLowerCase(), 1], [m[2].toLowerCase(), 1]]),
        subject: m[1].toLowerCase(),
        object: m[2].toLowerCase(),
        relationPhrase: phrase,
      };
    }
  }
  const multi = head.match(/^(\w+) (\w+) and (\w+) (\w+)$/);
  if (multi && NUMBER_WORDS[multi[1].toLowerCase()] !== undefined
      && NUMBER_WORDS[multi[3].toLowerCase()] !== undefined) {
    const counts = new Map<string, number>();
    counts.set(multi[2].toLowerCase(), NUMBER_WORDS[multi[1].toLowerCase()]);
    counts.set(multi[4].toLowerCase(), NUMBER_WORDS[multi[3].toLowerCase()]);
    return { kind: "multi", counts };
  }
  const single = head.match(/^(\w+) (\w+)$/);
  if (single && NUMBER_WORDS[single[1].toLowerCase()] !== undefined) {
    return {
      kind: "numerical",
      counts: new Map([[single[2].toLowerCase(), NUMBER_WORDS[single[1].toLowerCase()]]]),
    };
  }
  // off-grammar prompts still render something
  const token = head.split(" ").pop() ?? "object";
  return { kind: "numerical", counts: new Map([[token.toLowerCase(), 1]]) };
}

// -- the generated scene, kept alongside the image for the judge

export interface Scene {
  kind: PromptFields["kind"];
  counts: Record<string, number>; // noun -> how many actually rendered
  subject?: string;
  object?: string;
  targetPhrase?: string;
  realizedPhrase?: string;
}

export interface Generated {
  png: Buffer;
  scene: Scene;
  attentionMap: number[][] | null;
  features: number[] | null;
  aesthetic: number;
}

export interface ModelOptions {
  attentionShape?: [number, number];
  attentionLayers?: string[];
  featureDim?: number;
}

export class ReferenceModel {
  readonly family: ModelFamily;
  readonly params: ParamTree;
  readonly attentionShape: [number, number];
  readonly attentionLayers: string[];
  readonly featureDim: number;

  constructor(family: ModelFamily, options: ModelOptions = {}) {
    this.family = family;
    this.params = buildParameters(family);
    this.attentionShape = options.attentionShape ?? [16, 16];
    this.attentionLayers = options.attentionLayers ?? DEFAULT_ATTENTION_LAYERS[family];
    this.featureDim = options.featureDim ?? 16;
    for (const layer of this.attentionLayers) {
      if (!this.attentionQK(layer)) {
        throw new Error(`attention layer ${layer} not in the ${family} graph`);
      }
    }
  }

  private attentionQK(block: string): { q: Tensor; k: Tensor } | null {
    const unet = this.params.get(`${block}.attentions.0.to_q.weight`);
    if (unet) {
      return {
        q: unet,
        k: this.params.get(`${block}.attentions.0.to_k.weight`)!,
      };
    }
    const pixart = this.params.get(`${block}.attn.q_proj.weight`);
    if (pixart) {
      return { q: pixart, k: this.params.get(`${block}.attn.k_proj.weight`)! };
    }
    return null;
  }

  /** Initial latent noise: a pure function of the seed and the grid size. */
  initialNoise(seed: number, gridW: number, gridH: number): Float32Array {
    const draw = gaussian(streamOf(`noise:${seed}:${gridW}x${gridH}`));
    const field = new Float32Array(gridW * gridH);
    for (let i = 0; i < field.length; i++) field[i] = draw();
    return field;
  }

  /**
   * Object-token attention score per captured layer: q from the object
   * token, k from the whole prompt. This is the only place generation reads
   * the weights, so fine-tuning moves generations through it.
   */
  private layerScores(promptEmb: Float32Array, objectEmb: Float32Array): number[] {
    return this.attentionLayers.map((layer) => {
      const { q, k } = this.attentionQK(layer)!;
      return dot(matVec(q, objectEmb), matVec(k, promptEmb)) / EMBED_DIM;
    });
  }

  generate(req: GenerationRequest): Generated {
    const fields = parsePromptLoosely(req.prompt_text);
    const gridW = Math.max(1, Math.floor(req.width / 8));
    const gridH = Math.max(1, Math.floor(req.height / 8));

    const promptEmb = embedText(req.prompt_text);
    const nouns = [...fields.counts.keys()];
    const objectEmb = embedText(`token:${nouns[0]}`);
    const scores = this.layerScores(promptEmb, objectEmb);
    const drift = scores.reduce((a, b) => a + b, 0) / scores.length;

    // what actually ends up in the picture: the asked count, nudged by the
    // weights and by seed luck
    const scene: Scene = { kind: fields.kind, counts: {} };
    const jitter = gaussian(streamOf(`scene:${req.seed}:${req.prompt_text}`));
    for (const [noun, asked] of fields.counts) {
      const realized = Math.round(asked + drift + 0.6 * jitter());
      scene.counts[noun] = Math.min(24, Math.max(0, realized));
    }
    if (fields.kind === "spatial") {
      scene.subject = fields.subject;
      scene.object = fields.object;
      scene.targetPhrase = fields.relationPhrase;
      const flip = hash01(`relation:${req.seed}:${req.prompt_text}`) + drift;
      scene.realizedPhrase =
        flip < 0.75
          ? fields.relationPhrase
          : RELATION_PHRASES[
              Math.floor(
                hash01(`other-relation:${req.seed}:${req.prompt_text}`) *
                  RELATION_PHRASES.length,
              )
            ];
    }

    // denoise: blend seed noise toward blob signal over the step schedule
    const noise = this.initialNoise(req.seed, gridW, gridH);
    const blobs = this.placeBlobs(scene, req, gridW, gridH);
    const signal = this.blobField(blobs, gridW, gridH);
    const latent = new Float32Array(gridW * gridH);
    for (let i = 0; i < latent.length; i++) latent[i] = noise[i];
    for (let t = 1; t <= req.steps; t++) {
      const alpha = t / req.steps;
      const keep = 1 - alpha;
      for (let i = 0; i < latent.length; i++) {
        latent[i] = keep * noise[i] * 0.35 + alpha * signal[i];
      }
    }

    const attentionMap = req.want_attention
      ? this.captureAttention(blobs, req, scores)
      : null;
    const features = req.want_features
      ? this.pooledFeatures(latent, scores, scene)
      : null;
    const aesthetic = 4.0 + 2.0 * hash01(`aes:${req.prompt_text}:${req.seed}`);

    return {
      png: this.render(latent, gridW, gridH, req.width, req.height),
      scene,
      attentionMap,
      features,
      aesthetic,
    };
  }

  private placeBlobs(
    scene: Scene, req: GenerationRequest, gridW: number, gridH: number,
  ): Array<{ x: number; y: number; r: number }> {
    const rng = streamOf(`blobs:${req.seed}:${req.prompt_text}`);
    const blobs = [];
    const total = Object.values(scene.counts).reduce((a, b) => a + b, 0);
    for (let b = 0; b < Math.min(total, 32); b++) {
      blobs.push({
        x: rng() * gridW,
        y: rng() * gridH,
        r: (0.06 + 0.06 * rng()) * Math.min(gridW, gridH),
      });
    }
    return blobs;
  }

  private blobField(
    blobs: Array<{ x: number; y: number; r: number }>,
    gridW: number, gridH: number,
  ): Float32Array {
    const field = new Float32Array(gridW * gridH);
    for (let y = 0; y < gridH; y++) {
      for (let x = 0; x < gridW; x++) {
        let v = 0;
        for (const blob of blobs) {
          const d2 = (x - blob.x) ** 2 + (y - blob.y) ** 2;
          v += Math.exp(-d2 / (2 * blob.r * blob.r));
        }
        field[y * gridW + x] = Math.min(1, v);
      }
    }
    return field;
  }

  /** Average the object-token map over denoising steps and captured layers. */
  private captureAttention(
    blobs: Array<{ x: number; y: number; r: number }>,
    req: GenerationRequest,
    scores: number[],
  ): number[][] {
    const [h, w] = this.attentionShape;
    const acc: number[][] = Array.from({ length: h }, () => Array(w).fill(0));
    const gridW = Math.max(1, Math.floor(req.width / 8));
    const gridH = Math.max(1, Math.floor(req.height / 8));
    const sx = gridW / w;
    const sy = gridH / h;
    let samples = 0;
    for (let layerIdx = 0; layerIdx < this.attentionLayers.length; layerIdx++) {
      // layer gain: how strongly this layer's q/k pair lights up the token
      const gain = 1 / (1 + Math.exp(-scores[layerIdx]));
      for (let t = 0; t < req.steps; t++) {
        const wobble =
          1 + 0.15 * Math.sin(t * 0.7 + layerIdx * 2.1);
        for (let y = 0; y < h; y++) {
          for (let x = 0; x < w; x++) {
            let v = 0;
            const cx = (x + 0.5) * sx;
            const cy = (y + 0.5) * sy;
            for (const blob of blobs) {
              const d2 = (cx - blob.x) ** 2 + (cy - blob.y) ** 2;
              v += Math.exp(-d2 / (2 * blob.r * blob.r));
            }
            acc[y][x] += Math.min(1, v) * gain * wobble;
          }
        }
        samples++;
      }
    }
    for (let y = 0; y < h; y++) {
      for (let x = 0; x < w; x++) acc[y][x] /= Math.max(1, samples);
    }
    return acc;
  }

  private pooledFeatures(
    latent: Float32Array, scores: number[], scene: Scene,
  ): number[] {
    let mean = 0;
    let max = -Infinity;
    for (const v of latent) {
      mean += v;
      if (v > max) max = v;
    }
    mean /= latent.length;
    let variance = 0;
    for (const v of latent) variance += (v - mean) ** 2;
    variance /= latent.length;
    const total = Object.values(scene.counts).reduce((a, b) => a + b, 0);
    const base = [mean, Math.sqrt(variance), max, total / 19, ...scores];

    const out = new Array<number>(this.featureDim);
    const proj = streamOf("feature-projection");
    for (let i = 0; i < this.featureDim; i++) {
      let acc = 0;
      for (let j = 0; j < base.length; j++) acc += (proj() * 2 - 1) * base[j];
      out[i] = Math.tanh(acc);
    }
    return out;
  }

  private render(
    latent: Float32Array, gridW: number, gridH: number,
    width: number, height: number,
  ): Buffer {
    const rgb = new Uint8Array(width * height * 3);
    for (let y = 0; y < height; y++) {
      const gy = Math.min(gridH - 1, Math.floor((y * gridH) / height));
      for (let x = 0; x < width; x++) {
        const gx = Math.min(gridW - 1, Math.floor((x * gridW) / width));
        const v = Math.min(1, Math.max(0, latent[gy * gridW + gx] * 0.5 + 0.5));
        const i = (y * width + x) * 3;
        rgb[i] = Math.floor(34 + 200 * v);
        rgb[i + 1] = Math.floor(40 + 150 * v);
        rgb[i + 2] = Math.floor(60 + 120 * (1 - v));
      }
    }
    return encodePng(width, height, rgb);
  }
}
