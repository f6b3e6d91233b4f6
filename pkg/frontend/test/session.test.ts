// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import type { PredictResponse } from "../src/api.js";
import { createQuestionFlow } from "../src/questionFlow.js";
import { createSchemaBrowser } from "../src/schemaBrowser.js";
import { SessionState } from "../src/state.js";
import { fakeApi, fixedCandidates, flushMicrotasks } from "./helpers.js";

interface Session {
  state: SessionState;
  rendered: string[];
  flow: ReturnType<typeof createQuestionFlow>;
  browser: ReturnType<typeof createSchemaBrowser>;
  root: HTMLElement;
}

function buildSession(api = fakeApi()): Session {
  const root = document.createElement("div");
  const schemaPane = document.createElement("div");
  const queryPane = document.createElement("div");
  root.append(schemaPane, queryPane);
  document.body.append(root);

  const state = new SessionState();
  const rendered: string[] = [];
  const flow = createQuestionFlow(queryPane, api, state, async (_el, spec) => {
    rendered.push(JSON.stringify(spec));
  });
  const browser = createSchemaBrowser(
    schemaPane,
    api,
    state,
    (col) => flow.insertText(col),
    () => flow.input.dispatchEvent(new Event("input")),
  );
  return { state, rendered, flow, browser, root };
}

function type(flow: Session["flow"], text: string): void {
  flow.input.value = text;
  flow.input.dispatchEvent(new Event("input"));
}

/** select db -> ask -> pick candidate 2; returns the spec JSON rendered last. */
async function scriptedSession(): Promise<{ specJson: string; s: Session }> {
  const s = buildSession();
  await s.browser.whenIdle();
  s.browser.select.value = "cinema";
  s.browser.select.dispatchEvent(new Event("change"));
  await s.browser.whenIdle();

  type(s.flow, "每种类型有多少部电影");
  s.flow.submit.dispatchEvent(new Event("click"));
  await s.flow.whenIdle();

  const items = s.root.querySelectorAll<HTMLElement>(".candidate");
  items[1]!.dispatchEvent(new Event("click"));
  await s.flow.whenIdle();
  await flushMicrotasks();

  return { specJson: s.rendered[s.rendered.length - 1]!, s };
}

describe("scripted session", () => {
  it("renders the picked candidate's spec and is reproducible", async () => {
    const first = await scriptedSession();
    document.body.textContent = "";
    const second = await scriptedSession();

    const expected = JSON.stringify(fixedCandidates()[1]!.spec);
    expect(first.specJson).toBe(expected);
    expect(first.specJson).toBe(second.specJson);
    expect(first.s.state.selectedCandidate).toBe(1);
  });

  it("picking a candidate does not issue another predict request", async () => {
    let calls = 0;
    const api = fakeApi({
      predict: () => {
        calls += 1;
        return { candidates: fixedCandidates() };
      },
    });
    const s = buildSession(api);
    await s.browser.whenIdle();
    type(s.flow, "问题");
    s.flow.submit.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();
    expect(calls).toBe(1);

    const items = s.root.querySelectorAll<HTMLElement>(".candidate");
    items[1]!.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();
    await flushMicrotasks();
    expect(calls).toBe(1);
    expect(s.rendered.length).toBe(2);
  });

  it("shows a not-executable panel for invalid candidates", async () => {
    const s = buildSession();
    await s.browser.whenIdle();
    type(s.flow, "问题");
    s.flow.submit.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();

    const items = s.root.querySelectorAll<HTMLElement>(".candidate");
    items[2]!.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();
    await flushMicrotasks();

    expect(s.root.querySelector(".not-executable")).not.toBeNull();
    const badges = s.root.querySelectorAll(".badge.invalid");
    expect(badges.length).toBe(1);
  });

  it("discards stale responses by sequence number", async () => {
    const resolvers: ((r: PredictResponse) => void)[] = [];
    const api = fakeApi({ predict: undefined });
    api.predict = () =>
      new Promise<PredictResponse>((resolve) => resolvers.push(resolve));

    const s = buildSession(api);
    await s.browser.whenIdle();

    type(s.flow, "第一个问题");
    s.flow.submit.dispatchEvent(new Event("click"));
    type(s.flow, "第二个问题");
    s.flow.submit.dispatchEvent(new Event("click"));
    expect(resolvers.length).toBe(2);

    const fresh = { candidates: fixedCandidates().slice(0, 1) };
    const stale = { candidates: fixedCandidates() };
    resolvers[1]!(fresh);
    await flushMicrotasks();
    resolvers[0]!(stale); // late answer to the first question
    await flushMicrotasks();

    expect(s.state.lastResponse).toEqual(fresh);
    expect(s.state.history.length).toBe(1);
    expect(s.root.querySelectorAll(".candidate").length).toBe(1);
  });

  it("history is append-only across asks", async () => {
    const s = buildSession();
    await s.browser.whenIdle();
    type(s.flow, "问题一");
    s.flow.submit.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();
    const snapshot = [...s.state.history];

    type(s.flow, "问题二");
    s.flow.submit.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();

    expect(s.state.history.length).toBe(2);
    expect(s.state.history.slice(0, 1)).toEqual(snapshot);
    expect(s.state.history[1]!.question).toBe("问题二");
  });
});

describe("question box", () => {
  it("disables submit while the question is empty", async () => {
    const s = buildSession();
    await s.browser.whenIdle();
    expect(s.flow.submit.disabled).toBe(true);
    type(s.flow, "  ");
    expect(s.flow.submit.disabled).toBe(true);
    type(s.flow, "有多少部电影");
    expect(s.flow.submit.disabled).toBe(false);
    type(s.flow, "");
    expect(s.flow.submit.disabled).toBe(true);
  });

  it("surfaces stage errors inline", async () => {
    const api = fakeApi();
    api.predict = async () => {
      const { ApiError } = await import("../src/api.js");
      throw new ApiError("decode", "beam search failed", 500);
    };
    const s = buildSession(api);
    await s.browser.whenIdle();
    type(s.flow, "问题");
    s.flow.submit.dispatchEvent(new Event("click"));
    await s.flow.whenIdle();

    const banner = s.root.querySelector<HTMLElement>(
      ".candidates",
    )!.previousElementSibling as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toBe("[decode] beam search failed");
  });
});
