import { readFileSync } from "node:fs";
import { join } from "node:path";

import type {
  ApiClient,
  Candidate,
  PredictResponse,
  SchemaDoc,
} from "../src/api.js";
import { ApiError } from "../src/api.js";

const GOLDEN_DIR = join(__dirname, "..", "..", "tests", "golden");

export function goldenSpec(name: string): Record<string, unknown> {
  return JSON.parse(readFileSync(join(GOLDEN_DIR, `${name}.json`), "utf-8"));
}

export const CINEMA_SCHEMA: SchemaDoc = {
  db_id: "cinema",
  tables: [
    {
      name: "movies",
      columns: [
        { name: "name", type: "text" },
        { name: "genre", type: "text" },
        { name: "stars", type: "number" },
        { name: "released", type: "time" },
        { name: "studio_id", type: "number" },
      ],
      primary_key: null,
      foreign_keys: [["studio_id", "studios", "id"]],
    },
    {
      name: "studios",
      columns: [
        { name: "id", type: "number" },
        { name: "studio", type: "text" },
        { name: "founded", type: "time" },
      ],
      primary_key: null,
      foreign_keys: [],
    },
  ],
};

export function fixedCandidates(): Candidate[] {
  return [
    {
      vql: "visualize bar select movies.genre , count(movies.genre) from movies",
      score: -0.1,
      valid: true,
      spec: goldenSpec("bar"),
    },
    {
      vql: "visualize pie select movies.genre , count(movies.genre) from movies",
      score: -0.4,
      valid: true,
      spec: goldenSpec("pie"),
    },
    {
      vql: "visualize bar select movies.genre , count( from",
      score: -2.0,
      valid: false,
      spec: null,
    },
  ];
}

export interface FakeApiOptions {
  predict?: (question: string, dbId: string, k: number) => PredictResponse;
  schemas?: Record<string, SchemaDoc>;
}

/** Deterministic in-memory stand-in for the HTTP API. */
export function fakeApi(opts: FakeApiOptions = {}): ApiClient {
  const schemas = opts.schemas ?? { cinema: CINEMA_SCHEMA };
  return {
    async listSchemas() {
      return Object.keys(schemas).sort();
    },
    async getSchema(dbId) {
      const doc = schemas[dbId];
      if (!doc) throw new ApiError("load", `unknown db_id '${dbId}'`, 404);
      return doc;
    },
    async predict(question, dbId, k) {
      if (opts.predict) return opts.predict(question, dbId, k);
      return { candidates: fixedCandidates() };
    },
    async compile() {
      return goldenSpec("bar");
    },
  };
}

export function flushMicrotasks(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
