/** Controller: wires the API client, the reducers, and the renderer. */

import { ApiClient } from "./api.js";
import {
  applyError,
  applyFlush,
  applyModelVersion,
  applyReply,
  applySession,
  applyShieldLog,
  applyUserMessage,
  initialState,
  type ViewState,
} from "./state.js";
import { render, type Handlers } from "./ui.js";

export class App {
  private state: ViewState = initialState();
  private lastAction: (() => Promise<void>) | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  getState(): ViewState {
    return this.state;
  }

  async start(): Promise<void> {
    await this.attempt(async () => {
      const health = await this.client.health();
      this.update(applyModelVersion(this.state, health.model_version));
      const session = await this.client.createSession();
      this.update(applySession(this.state, session));
    });
  }

  private readonly handlers: Handlers = {
    onSend: (text) => void this.send(text),
    onConfirm: () => void this.send("confirm"),
    onRevise: (key, text) => void this.send(`revise ${key}: ${text}`),
    onRetry: () => void this.retry(),
    onAdminRefresh: (token) => void this.refreshShieldLog(token),
    onAdminFlush: (token) => void this.flushRetrain(token),
  };

  async send(text: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) return;
    await this.attempt(async () => {
      this.update(applyUserMessage(this.state, text));
      const reply = await this.client.sendMessage(sessionId, text);
      this.update(applyReply(this.state, reply));
      // the dialogue is turn-based: re-fetch the session after each turn so
      // the view stays a pure function of what the service stores
      const session = await this.client.getSession(sessionId);
      this.update(applySession(this.state, session));
    });
  }

  async refreshShieldLog(token: string): Promise<void> {
    await this.attempt(async () => {
      const log = await this.client.shieldLog(token);
      this.update(applyShieldLog(this.state, log.entries));
    });
  }

  async flushRetrain(token: string): Promise<void> {
    await this.attempt(async () => {
      const result = await this.client.flushRetrain(token);
      this.update(applyFlush(this.state, result));
    });
  }

  async retry(): Promise<void> {
    const action = this.lastAction ?? (() => this.start());
    await action();
  }

  private async attempt(action: () => Promise<void>): Promise<void> {
    this.lastAction = action;
    try {
      await action();
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      this.update(applyError(this.state, message));
    }
  }

  private update(state: ViewState): void {
    this.state = state;
    render(this.root, this.state, this.handlers);
  }
}
