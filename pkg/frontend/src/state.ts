import type { PredictResponse } from "./api.js";

export interface HistoryEntry {
  dbId: string;
  question: string;
  response: PredictResponse;
}

/** Session state for the ask-and-render loop.
 *
 * Requests are numbered; a response is applied only if no newer request
 * was issued in the meantime, so slow answers to stale questions are
 * discarded instead of clobbering the screen.
 */
export class SessionState {
  dbId: string | null = null;
  question = "";
  lastResponse: PredictResponse | null = null;
  selectedCandidate = -1;

  private seq = 0;
  private applied = 0;
  private readonly log: HistoryEntry[] = [];

  /** Append-only record of every applied (question, response) pair. */
  get history(): readonly HistoryEntry[] {
    return this.log;
  }

  beginRequest(): number {
    return ++this.seq;
  }

  /** Returns false (and changes nothing) when the response is stale. */
  applyResponse(seq: number, response: PredictResponse): boolean {
    if (seq < this.seq || seq <= this.applied) return false;
    this.applied = seq;
    this.lastResponse = response;
    this.selectedCandidate = response.candidates.findIndex((c) => c.valid);
    if (this.dbId !== null) {
      this.log.push({ dbId: this.dbId, question: this.question, response });
    }
    return true;
  }

  selectCandidate(index: number): void {
    if (!this.lastResponse) return;
    if (index < 0 || index >= this.lastResponse.candidates.length) return;
    this.selectedCandidate = index;
  }

  get selected() {
    if (!this.lastResponse || this.selectedCandidate < 0) return null;
    return this.lastResponse.candidates[this.selectedCandidate] ?? null;
  }
}
