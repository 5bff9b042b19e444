export {
  DEFAULT_ATTENTION_LAYERS,
  EMBED_DIM,
  ReferenceModel,
  buildParameters,
  embedText,
  parsePromptLoosely,
  type Generated,
  type ModelFamily,
  type ParamTree,
  type Scene,
  type Tensor,
} from "./model.js";
export {
  FinetuneConfigError,
  checksums,
  finetune,
  finetuneToCheckpoint,
  loadManifest,
  readCheckpoint,
  resolveSelector,
  tensorChecksum,
  writeCheckpoint,
  type FinetuneConfig,
  type FinetuneResult,
  type ManifestRow,
  type TrainableSelector,
} from "./finetune.js";
export { encodePng } from "./png.js";
export {
  errorResponseSchema,
  evalRequestSchema,
  evalResponseSchema,
  generationRequestSchema,
  generationRequestSchemaFor,
  generationResponseSchema,
  healthResponseSchema,
  historyTurnSchema,
  requestKey,
  type EvalRequest,
  type GenerationRequest,
  type GenerationResponse,
  type HistoryTurn,
} from "./protocol.js";
export { gaussian, hash01, hash32, mulberry32, streamOf, type Rng } from "./rng.js";
export { createServer, type GeneratorLike, type ServerConfig } from "./server.js";
export { BuiltinVlm, RecordingVlm, type Vlm } from "./vlm.js";
