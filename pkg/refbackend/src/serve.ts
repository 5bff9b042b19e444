/** CLI entry: boot the backend on a port and print where it listens. */

import { parseArgs } from "node:util";

import { ReferenceModel, type ModelFamily } from "./model.js";
import { createServer } from "./server.js";

const { values } = parseArgs({
  options: {
    port: { type: "string", default: "8787" },
    family: { type: "string", default: "unet-sd21" },
    profile: { type: "string", default: "768" },
    tag: { type: "string", default: "reference" },
    "auth-token": { type: "string" },
    "max-concurrency": { type: "string", default: "4" },
  },
});

const profile = Number(values.profile) === 512 ? 512 : 768;
const model = new ReferenceModel(values.family as ModelFamily);
const app = createServer({
  profile,
  backendTag: values.tag,
  model,
  authToken: values["auth-token"] ?? process.env.SEEDMINE_AUTH_TOKEN,
  maxConcurrency: Number(values["max-concurrency"]),
});

const port = Number(values.port);
app.listen(port, () => {
  console.log(`reference backend (${values.family}, ${profile}px) on http://127.0.0.1:${port}`);
});
