/** Typed client for the text2vis HTTP API.
 *
 * The frontend never interprets VQL itself: every candidate string and
 * every chart spec is taken verbatim from the server.
 */

export interface ColumnDoc {
  name: string;
  type: string;
}

export interface TableDoc {
  name: string;
  columns: ColumnDoc[];
  primary_key: string[] | string | null;
  foreign_keys: [string, string, string][];
}

export interface SchemaDoc {
  db_id: string;
  tables: TableDoc[];
}

export interface Candidate {
  vql: string;
  score: number;
  valid: boolean;
  spec: Record<string, unknown> | null;
}

export interface PredictResponse {
  candidates: Candidate[];
}

/** Server error envelope: {stage, message}. */
export class ApiError extends Error {
  constructor(
    readonly stage: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function asApiError(res: Response): Promise<ApiError> {
  let stage = "network";
  let message = `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.stage === "string") stage = body.stage;
    if (body && typeof body.message === "string") message = body.message;
    else if (body && body.detail) message = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(stage, message, res.status);
}

export interface ApiClient {
  listSchemas(): Promise<string[]>;
  getSchema(dbId: string): Promise<SchemaDoc>;
  predict(question: string, dbId: string, k: number): Promise<PredictResponse>;
  compile(vql: string, dbId: string): Promise<Record<string, unknown>>;
}

export function createApiClient(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch,
): ApiClient {
  const base = baseUrl.replace(/\/+$/, "");

  async function get<T>(path: string): Promise<T> {
    const res = await fetchImpl(`${base}${path}`);
    if (!res.ok) throw await asApiError(res);
    return (await res.json()) as T;
  }

  async function post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetchImpl(`${base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await asApiError(res);
    return (await res.json()) as T;
  }

  return {
    listSchemas: () => get<string[]>("/schemas"),
    getSchema: (dbId) => get<SchemaDoc>(`/schemas/${encodeURIComponent(dbId)}`),
    predict: (question, dbId, k) =>
      post<PredictResponse>("/predict", { question, db_id: dbId, k }),
    compile: async (vql, dbId) => {
      const out = await post<{ spec: Record<string, unknown> }>("/compile", {
        vql,
        db_id: dbId,
      });
      return out.spec;
    },
  };
}
