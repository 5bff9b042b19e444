/**
 * Deterministic, platform-independent random streams.
 *
 * Everything in the backend that looks random derives from these: the
 * initial latent noise from the request seed, parameter initialization from
 * the parameter name, aesthetic jitter from the prompt. mulberry32 only
 * touches uint32 arithmetic, so the sequences are bit-stable across
 * platforms and Node versions.
 */

/** FNV-1a over a string, as the 32-bit state seed for a named stream. */
export function hash32(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export type Rng = () => number;

/** mulberry32: returns floats in [0, 1). */
export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Stream keyed by an arbitrary label, e.g. `noise:42` or a tensor name. */
export function streamOf(label: string): Rng {
  return mulberry32(hash32(label));
}

/** Standard normal via Box-Muller on top of a uniform stream. */
export function gaussian(rng: Rng): () => number {
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const value = spare;
      spare = null;
      return value;
    }
    let u = 0;
    let v = 0;
    while (u === 0) u = rng();
    while (v === 0) v = rng();
    const mag = Math.sqrt(-2.0 * Math.log(u));
    spare = mag * Math.sin(2.0 * Math.PI * v);
    return mag * Math.cos(2.0 * Math.PI * v);
  };
}

/** One uniform float in [0, 1) for a label, without keeping the stream. */
export function hash01(label: string): number {
  return streamOf(label)();
}
