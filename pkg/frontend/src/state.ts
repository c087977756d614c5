/** View state and pure reducers: the view is a function of service responses. */

import type {
  FlushPayload,
  MessageReply,
  SessionPayload,
  SessionState,
  ShieldLogEntry,
  SlotRow,
  TranslationResult,
} from "./api.js";

export const REJECTION_PREFIX = "That answer was rejected by the input filter.";

export interface TranscriptEntry {
  role: "user" | "assistant";
  text: string;
  rejection: boolean;
}

export interface AdminState {
  modelVersion: number | null;
  shieldLog: ShieldLogEntry[];
  lastFlush: FlushPayload | null;
}

export interface ViewState {
  sessionId: string | null;
  sessionState: SessionState | null;
  transcript: TranscriptEntry[];
  slots: SlotRow[];
  template: string | null;
  formula: string | null;
  outstandingQuery: string | null;
  outputs: string[];
  /** Connection or HTTP failure to surface as a retryable banner. */
  error: string | null;
  admin: AdminState;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    sessionState: null,
    transcript: [],
    slots: [],
    template: null,
    formula: null,
    outstandingQuery: null,
    outputs: [],
    error: null,
    admin: { modelVersion: null, shieldLog: [], lastFlush: null },
  };
}

function withResult(state: ViewState, result: TranslationResult | null): ViewState {
  if (result === null) return state;
  return {
    ...state,
    slots: result.slots,
    template: result.template,
    formula: result.formula,
    outstandingQuery: result.queries.length > 0 ? result.queries[0] : null,
  };
}

export function applySession(state: ViewState, payload: SessionPayload): ViewState {
  return withResult(
    {
      ...state,
      sessionId: payload.id,
      sessionState: payload.state,
      outputs: payload.outputs,
      error: null,
    },
    payload.result,
  );
}

export function applyUserMessage(state: ViewState, text: string): ViewState {
  return {
    ...state,
    transcript: [...state.transcript, { role: "user", text, rejection: false }],
  };
}

export function applyReply(state: ViewState, reply: MessageReply): ViewState {
  const entry: TranscriptEntry = {
    role: "assistant",
    text: reply.reply,
    rejection: reply.reply.startsWith(REJECTION_PREFIX),
  };
  return withResult(
    {
      ...state,
      sessionState: reply.state,
      transcript: [...state.transcript, entry],
      error: null,
    },
    reply.result,
  );
}

export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

export function applyShieldLog(
  state: ViewState,
  entries: ShieldLogEntry[],
): ViewState {
  return { ...state, admin: { ...state.admin, shieldLog: entries } };
}

export function applyModelVersion(state: ViewState, version: number): ViewState {
  return { ...state, admin: { ...state.admin, modelVersion: version } };
}

export function applyFlush(state: ViewState, flush: FlushPayload): ViewState {
  return {
    ...state,
    admin: { ...state.admin, lastFlush: flush, modelVersion: flush.model_version },
  };
}

/** The confirm control is only live while the service awaits confirmation. */
export function confirmEnabled(state: ViewState): boolean {
  return state.sessionState === "confirming";
}

export function reviseEnabled(state: ViewState): boolean {
  return state.sessionState === "confirming";
}
