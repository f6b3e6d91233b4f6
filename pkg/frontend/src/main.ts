import vegaEmbed from "vega-embed";

import { createApiClient } from "./api.js";
import { createQuestionFlow } from "./questionFlow.js";
import { createSchemaBrowser } from "./schemaBrowser.js";
import { SessionState } from "./state.js";

const API_BASE =
  (window as { T2V_API_BASE?: string }).T2V_API_BASE ?? "http://localhost:8000";

const api = createApiClient(API_BASE);
const state = new SessionState();

const schemaPane = document.getElementById("schema-pane")!;
const queryPane = document.getElementById("query-pane")!;

const flow = createQuestionFlow(queryPane, api, state, async (el, spec) => {
  await vegaEmbed(el, spec as Parameters<typeof vegaEmbed>[1], {
    actions: false,
  });
});

createSchemaBrowser(
  schemaPane,
  api,
  state,
  (column) => flow.insertText(column),
  () => flow.input.dispatchEvent(new Event("input")),
);
