/**
 * Attention-surgery fine-tuning over a curated manifest.
 *
 * The trainable set is structural, never hand-listed: query/key projections
 * only, resolved by walking the parameter tree by name, with the unet's
 * first down-sampling block and last up-sampling block frozen. Everything
 * outside the resolved set must come out of training bit-identical, which
 * the checkpoint records as per-tensor checksums.
 */

import { createHash } from "node:crypto";
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { ModelFamily, ParamTree, Tensor } from "./model.js";
import { EMBED_DIM, buildParameters, embedText, parsePromptLoosely } from "./model.js";

export class FinetuneConfigError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FinetuneConfigError";
  }
}

export interface TrainableSelector {
  projections: string[]; // "q" | "k" | "v" | "out"
  exclude_blocks: string[]; // "first_down" | "last_up"
}

export interface FinetuneConfig {
  model_family: ModelFamily;
  trainable_selector: TrainableSelector;
  iterations: number;
  learning_rate: number;
  per_device_batch: number;
  devices: number;
  grad_accum: number;
  effective_batch: number;
  grad_clip: number | null;
  base_learning_rate: number | null;
}

export interface ManifestRow {
  prompt_text: string;
  task: string;
  rectified_text?: string | null;
  included?: boolean;
}

const PROJECTION_SUFFIXES: Record<string, string[]> = {
  q: [".to_q.weight", ".attn.q_proj.weight"],
  k: [".to_k.weight", ".attn.k_proj.weight"],
  v: [".to_v.weight", ".attn.v_proj.weight"],
  out: [".to_out.weight", ".attn.out_proj.weight"],
};

function excludedPrefixes(names: string[], excludeBlocks: string[]): string[] {
  const prefixes: string[] = [];
  for (const label of excludeBlocks) {
    if (label === "first_down") {
      prefixes.push("down_blocks.0.");
      continue;
    }
    if (label === "last_up") {
      // last up-sampling block is whatever the graph says it is
      let last = -1;
      for (const name of names) {
        const m = name.match(/^up_blocks\.(\d+)\./);
        if (m) last = Math.max(last, Number(m[1]));
      }
      if (last >= 0) prefixes.push(`up_blocks.${last}.`);
      continue;
    }
    throw new FinetuneConfigError(`unknown exclude block label ${label}`);
  }
  return prefixes;
}

/**
 * Pure function of the parameter names and the selector; snapshot-tested so
 * a graph or selector change is a visible diff, not a silent retrain.
 */
export function resolveSelector(
  names: Iterable<string>, selector: TrainableSelector,
): string[] {
  const all = [...names];
  const suffixes = selector.projections.flatMap((p) => {
    const s = PROJECTION_SUFFIXES[p];
    if (!s) throw new FinetuneConfigError(`unknown projection ${p}`);
    return s;
  });
  const excluded = excludedPrefixes(all, selector.exclude_blocks);
  const picked = all
    .filter((name) => suffixes.some((s) => name.endsWith(s)))
    .filter((name) => !excluded.some((p) => name.startsWith(p)))
    .sort();
  if (picked.length === 0) {
    throw new FinetuneConfigError(
      "trainable selector matches no parameters in the model graph",
    );
  }
  return picked;
}

export function tensorChecksum(t: Tensor): string {
  const bytes = Buffer.from(t.data.buffer, t.data.byteOffset, t.data.byteLength);
  return createHash("sha256").update(bytes).digest("hex");
}

export function checksums(params: ParamTree): Map<string, string> {
  const out = new Map<string, string>();
  for (const [name, tensor] of params) out.set(name, tensorChecksum(tensor));
  return out;
}

function trainTarget(task: string): number {
  const m = task.match(/^numerical:(\d+)$/);
  if (m) return Number(m[1]) / 10;
  return 0.15; // spatial and off-grammar tasks share one small target
}

interface BlockQK {
  q: Tensor;
  k: Tensor;
  qName: string;
  kName: string;
}

function pairByBlock(params: ParamTree, selected: string[]): BlockQK[] {
  const blocks = new Map<string, Partial<BlockQK>>();
  for (const name of selected) {
    const isQ = name.endsWith(".to_q.weight") || name.endsWith(".attn.q_proj.weight");
    const isK = name.endsWith(".to_k.weight") || name.endsWith(".attn.k_proj.weight");
    if (!isQ && !isK) continue; // v/out projections train but carry no loss term
    const block = name.replace(
      /\.(attentions\.0\.to_[qk]|attn\.[qk]_proj)\.weight$/, "",
    );
    const slot = blocks.get(block) ?? {};
    if (isQ) {
      slot.q = params.get(name);
      slot.qName = name;
    } else {
      slot.k = params.get(name);
      slot.kName = name;
    }
    blocks.set(block, slot);
  }
  return [...blocks.values()].filter(
    (b): b is BlockQK => !!b.q && !!b.k,
  );
}

export interface FinetuneResult {
  selected: string[];
  steps: number;
  finalLoss: number;
}

/**
 * Plain SGD with gradient accumulation and optional global-norm clipping.
 * Gradients exist only for the selected tensors; nothing else is touched.
 */
export function finetune(
  params: ParamTree, family: ModelFamily,
  rows: ManifestRow[], config: FinetuneConfig,
): FinetuneResult {
  if (config.model_family !== family) {
    throw new FinetuneConfigError(
      `config is for ${config.model_family}, model is ${family}`,
    );
  }
  const selected = resolveSelector(params.keys(), config.trainable_selector);
  const pairs = pairByBlock(params, selected);
  const examples = rows.filter((r) => r.included !== false);
  if (examples.length === 0) {
    throw new FinetuneConfigError("manifest has no included rows to train on");
  }

  const embedCache = new Map<string, { prompt: Float32Array; token: Float32Array }>();
  const embedsOf = (row: ManifestRow) => {
    const text = row.rectified_text ?? row.prompt_text;
    let hit = embedCache.get(text);
    if (!hit) {
      const fields = parsePromptLoosely(text);
      const noun = [...fields.counts.keys()][0];
      hit = { prompt: embedText(text), token: embedText(`token:${noun}`) };
      embedCache.set(text, hit);
    }
    return hit;
  };

  const grads = new Map<string, Float32Array>();
  for (const name of selected) {
    grads.set(name, new Float32Array(params.get(name)!.data.length));
  }

  const batch = Math.max(1, config.effective_batch);
  let cursor = 0;
  let finalLoss = 0;
  for (let step = 0; step < config.iterations; step++) {
    for (const g of grads.values()) g.fill(0);
    let loss = 0;
    for (let b = 0; b < batch; b++) {
      const row = examples[cursor % examples.length];
      cursor++;
      const { prompt, token } = embedsOf(row);
      const target = trainTarget(row.task);
      for (const pair of pairs) {
        const qv = matVec(pair.q, token);
        const kv = matVec(pair.k, prompt);
        let score = 0;
        for (let i = 0; i < qv.length; i++) score += qv[i] * kv[i];
        score /= EMBED_DIM;
        const err = score - target;
        loss += err * err;
        const coeff = (2 * err) / (EMBED_DIM * batch * pairs.length);
        accumulateOuter(grads.get(pair.qName)!, kv, token, coeff);
        accumulateOuter(grads.get(pair.kName)!, qv, prompt, coeff);
      }
    }
    finalLoss = loss / (batch * Math.max(1, pairs.length));

    if (config.grad_clip != null) {
      let sq = 0;
      for (const g of grads.values()) for (const v of g) sq += v * v;
      const norm = Math.sqrt(sq);
      if (norm > config.grad_clip) {
        const scale = config.grad_clip / norm;
        for (const g of grads.values()) {
          for (let i = 0; i < g.length; i++) g[i] *= scale;
        }
      }
    }

    for (const name of selected) {
      const w = params.get(name)!.data;
      const g = grads.get(name)!;
      for (let i = 0; i < w.length; i++) {
        w[i] = Math.fround(w[i] - config.learning_rate * g[i]);
      }
    }
  }
  return { selected, steps: config.iterations, finalLoss };
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

// grad[i,j] += coeff * left[i] * right[j]
function accumulateOuter(
  grad: Float32Array, left: Float32Array, right: Float32Array, coeff: number,
): void {
  for (let i = 0; i < left.length; i++) {
    const li = coeff * left[i];
    for (let j = 0; j < right.length; j++) {
      grad[i * right.length + j] += li * right[j];
    }
  }
}

// -- checkpoint directory: config.json + tensors.json + tensors.bin

interface TensorMeta {
  shape: number[];
  sha256: string;
  trainable: boolean;
  offset: number;
  length: number;
}

export function writeCheckpoint(
  dir: string, params: ParamTree, config: FinetuneConfig, selected: string[],
): void {
  mkdirSync(dir, { recursive: true });
  const trainable = new Set(selected);
  const meta: Record<string, TensorMeta> = {};
  const chunks: Buffer[] = [];
  let offset = 0;
  for (const [name, tensor] of params) {
    const bytes = Buffer.from(
      tensor.data.buffer, tensor.data.byteOffset, tensor.data.byteLength,
    );
    meta[name] = {
      shape: tensor.shape,
      sha256: tensorChecksum(tensor),
      trainable: trainable.has(name),
      offset,
      length: tensor.data.length,
    };
    chunks.push(Buffer.from(bytes)); // copy; the tree stays mutable
    offset += tensor.data.length;
  }
  writeFileSync(join(dir, "config.json"), JSON.stringify(config, null, 2) + "\n");
  writeFileSync(join(dir, "tensors.json"), JSON.stringify(meta, null, 2) + "\n");
  writeFileSync(join(dir, "tensors.bin"), Buffer.concat(chunks));
}

export function readCheckpoint(dir: string): {
  config: FinetuneConfig;
  params: ParamTree;
  trainable: string[];
} {
  const config = JSON.parse(readFileSync(join(dir, "config.json"), "utf8"));
  const meta: Record<string, TensorMeta> = JSON.parse(
    readFileSync(join(dir, "tensors.json"), "utf8"),
  );
  const bin = readFileSync(join(dir, "tensors.bin"));
  const params: ParamTree = new Map();
  const trainable: string[] = [];
  for (const [name, m] of Object.entries(meta)) {
    const data = new Float32Array(m.length);
    for (let i = 0; i < m.length; i++) {
      data[i] = bin.readFloatLE((m.offset + i) * 4);
    }
    const tensor = { shape: m.shape, data };
    if (tensorChecksum(tensor) !== m.sha256) {
      throw new FinetuneConfigError(`checkpoint tensor ${name} fails its checksum`);
    }
    params.set(name, tensor);
    if (m.trainable) trainable.push(name);
  }
  return { config, params, trainable };
}

export function loadManifest(path: string): ManifestRow[] {
  return readFileSync(path, "utf8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as ManifestRow);
}

/** Convenience wrapper: fresh weights, train, persist. */
export function finetuneToCheckpoint(
  manifestPath: string, config: FinetuneConfig, outDir: string,
): FinetuneResult {
  const params = buildParameters(config.model_family);
  const rows = loadManifest(manifestPath);
  const result = finetune(params, config.model_family, rows, config);
  writeCheckpoint(outDir, params, config, result.selected);
  return result;
}
