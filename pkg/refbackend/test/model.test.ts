import { describe, expect, it } from "vitest";

import {
  DEFAULT_ATTENTION_LAYERS,
  ReferenceModel,
  buildParameters,
  parsePromptLoosely,
} from "../src/model.js";
import { generationRequestSchema } from "../src/protocol.js";

function request(overrides: Record<string, unknown> = {}) {
  return generationRequestSchema.parse({
    prompt_text: "Four apples, in an old European town",
    seed: 42,
    width: 256,
    height: 256,
    steps: 8,
    want_attention: true,
    want_features: true,
    ...overrides,
  });
}

describe("parameter tree", () => {
  it("has the expected unet attention layout", () => {
    const names = [...buildParameters("unet-sd21").keys()];
    expect(names).toContain("down_blocks.0.attentions.0.to_q.weight");
    expect(names).toContain("mid_block.attentions.0.to_k.weight");
    expect(names).toContain("up_blocks.2.resnets.0.conv.weight");
    expect(names.every((n) => n.endsWith(".weight"))).toBe(true);
  });

  it("has the expected pixart layout", () => {
    const names = [...buildParameters("transformer-pixart").keys()];
    expect(names).toContain("blocks.0.attn.q_proj.weight");
    expect(names).toContain("blocks.3.mlp.fc2.weight");
    expect(names).toContain("final_layer.proj.weight");
  });

  it("initializes deterministically", () => {
    const a = buildParameters("unet-sd21");
    const b = buildParameters("unet-sd21");
    for (const [name, tensor] of a) {
      expect(Buffer.from(tensor.data.buffer).equals(Buffer.from(b.get(name)!.data.buffer))).toBe(true);
    }
  });

  it("rejects a capture layer missing from the graph", () => {
    expect(
      () => new ReferenceModel("unet-sd21", { attentionLayers: ["down_blocks.9"] }),
    ).toThrow(/not in the/);
  });
});

describe("generation determinism", () => {
  it("same prompt and seed give byte-identical pixels", () => {
    const a = new ReferenceModel("unet-sd21").generate(request());
    const b = new ReferenceModel("unet-sd21").generate(request());
    expect(a.png.equals(b.png)).toBe(true);
    expect(a.scene).toEqual(b.scene);
    expect(a.attentionMap).toEqual(b.attentionMap);
    expect(a.features).toEqual(b.features);
  });

  it("a different seed changes the pixels", () => {
    const model = new ReferenceModel("unet-sd21");
    const a = model.generate(request({ seed: 42 }));
    const b = model.generate(request({ seed: 43 }));
    expect(a.png.equals(b.png)).toBe(false);
  });

  it("initial noise is a pure function of seed and grid", () => {
    const model = new ReferenceModel("unet-sd21");
    expect(model.initialNoise(7, 32, 32)).toEqual(model.initialNoise(7, 32, 32));
    expect(model.initialNoise(7, 32, 32)).not.toEqual(model.initialNoise(8, 32, 32));
  });
});

describe("attention capture", () => {
  it("map shape follows the configured pooling", () => {
    const model = new ReferenceModel("unet-sd21", { attentionShape: [4, 6] });
    const out = model.generate(request());
    expect(out.attentionMap).toHaveLength(4);
    expect(out.attentionMap![0]).toHaveLength(6);
  });

  it("captured layers are configurable and change the map", () => {
    const base = new ReferenceModel("unet-sd21").generate(request());
    const other = new ReferenceModel("unet-sd21", {
      attentionLayers: ["down_blocks.1"],
    }).generate(request());
    expect(base.attentionMap).not.toEqual(other.attentionMap);
    expect(DEFAULT_ATTENTION_LAYERS["unet-sd21"]).toContain("mid_block");
  });

  it("is omitted unless asked for", () => {
    const out = new ReferenceModel("unet-sd21").generate(
      request({ want_attention: false, want_features: false }),
    );
    expect(out.attentionMap).toBeNull();
    expect(out.features).toBeNull();
  });
});

describe("features and scene", () => {
  it("pools to the advertised dimension", () => {
    const model = new ReferenceModel("unet-sd21", { featureDim: 24 });
    expect(model.generate(request()).features).toHaveLength(24);
  });

  it("keeps a scene record with non-negative counts", () => {
    for (let seed = 0; seed < 20; seed++) {
      const out = new ReferenceModel("unet-sd21").generate(request({ seed }));
      for (const count of Object.values(out.scene.counts)) {
        expect(count).toBeGreaterThanOrEqual(0);
      }
    }
  });

  it("aesthetic stays in a sane band", () => {
    const out = new ReferenceModel("transformer-pixart").generate(request());
    expect(out.aesthetic).toBeGreaterThanOrEqual(4);
    expect(out.aesthetic).toBeLessThanOrEqual(6);
  });
});

describe("prompt parsing", () => {
  it("reads counted prompts", () => {
    const fields = parsePromptLoosely("Four apples, in an old European town");
    expect(fields.kind).toBe("numerical");
    expect(fields.counts.get("apples")).toBe(4);
  });

  it("reads spatial prompts", () => {
    const fields = parsePromptLoosely("An apple on the left of a banana, at dusk");
    expect(fields.kind).toBe("spatial");
    expect(fields.subject).toBe("apple");
    expect(fields.object).toBe("banana");
    expect(fields.relationPhrase).toBe("on the left of");
  });

  it("reads two-object prompts", () => {
    const fields = parsePromptLoosely("Two ants and one basketball, in the rain");
    expect(fields.kind).toBe("multi");
    expect(fields.counts.get("ants")).toBe(2);
    expect(fields.counts.get("basketball")).toBe(1);
  });

  it("falls back gracefully off the grammar", () => {
    const fields = parsePromptLoosely("weird freeform prompt");
    expect(fields.kind).toBe("numerical");
    expect(fields.counts.size).toBe(1);
  });
});
