import { ApiClient } from "./api.js";
import { PlaygroundState } from "./state.js";
import type { Mode, ModelStats } from "./types.js";

const MODES: Mode[] = ["full_llm", "mini_hybrid", "markov_hybrid"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** DOM shell around PlaygroundState plus the stats side panel. */
export class PlaygroundApp {
  readonly state: PlaygroundState;
  private stats: ModelStats | null = null;
  private statsError = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient = new ApiClient(),
    state?: PlaygroundState,
  ) {
    this.state = state ?? new PlaygroundState(this.api);
    this.state.onChange(() => this.render());
  }

  init(): void {
    this.root.innerHTML = `
      <div class="layout">
        <section class="chat">
          <h1>skillrec playground</h1>
          <div id="banner"></div>
          <ol id="transcript" class="transcript"></ol>
          <div id="chips" class="chips"></div>
          <form id="query-form" class="query-form">
            <input id="query-input" type="text" placeholder="Ask the assistant..." autocomplete="off" />
            <button id="send-button" type="submit" disabled>Send</button>
          </form>
        </section>
        <aside class="panel">
          <h2>Model</h2>
          <label>mode
            <select id="mode-select"></select>
          </label>
          <button id="rebuild-button" type="button">Rebuild model</button>
          <div id="stats"></div>
        </aside>
      </div>`;

    const select = this.root.querySelector<HTMLSelectElement>("#mode-select")!;
    for (const mode of MODES) {
      const option = el("option", undefined, mode);
      option.value = mode;
      select.appendChild(option);
    }
    select.value = this.state.mode;
    select.addEventListener("change", () => this.state.setMode(select.value as Mode));

    const form = this.root.querySelector<HTMLFormElement>("#query-form")!;
    const input = this.root.querySelector<HTMLInputElement>("#query-input")!;
    input.addEventListener("input", () => this.render());
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuery(input.value);
    });
    this.root.querySelector<HTMLButtonElement>("#rebuild-button")!.addEventListener("click", () => {
      void this.rebuildModel();
    });

    this.render();
    void this.refreshStats();
  }

  async submitQuery(text: string): Promise<void> {
    const input = this.root.querySelector<HTMLInputElement>("#query-input");
    await this.state.sendQuery(text);
    if (input) input.value = "";
    this.render();
  }

  async clickChip(index: number): Promise<void> {
    await this.state.clickChip(index);
    await this.refreshStats();
  }

  async rebuildModel(): Promise<void> {
    try {
      await this.api.rebuildModel();
    } catch {
      this.statsError = true;
    }
    await this.refreshStats();
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.api.modelStats();
      this.statsError = false;
    } catch {
      // stats are decorative; the chat must keep working without them
      this.stats = null;
      this.statsError = true;
    }
    this.render();
  }

  render(): void {
    const transcript = this.root.querySelector<HTMLOListElement>("#transcript");
    if (!transcript) return;
    transcript.innerHTML = "";
    for (const turn of this.state.transcript) {
      const item = el("li", `turn turn-${turn.role}`);
      item.appendChild(el("span", "turn-text", turn.text));
      if (turn.invoked_skill) {
        item.appendChild(el("span", "turn-skill", turn.invoked_skill));
      }
      transcript.appendChild(item);
    }

    const banner = this.root.querySelector<HTMLDivElement>("#banner")!;
    banner.innerHTML = "";
    if (this.state.banner) {
      const box = el("div", `banner banner-${this.state.banner.kind}`, this.state.banner.text);
      if (this.state.banner.kind === "error") {
        const retry = el("button", "retry-button", "Retry");
        retry.addEventListener("click", () => void this.state.retry());
        box.appendChild(retry);
      }
      banner.appendChild(box);
    }

    const chips = this.root.querySelector<HTMLDivElement>("#chips")!;
    chips.innerHTML = "";
    this.state.chips.forEach((chip, index) => {
      const button = el("button", "chip");
      button.type = "button";
      button.disabled = this.state.pending;
      button.dataset.skill = chip.skill;
      button.appendChild(el("span", "chip-prompt", chip.prompt));
      button.appendChild(el("span", "chip-skill", chip.skill));
      button.appendChild(el("span", `chip-source chip-source-${chip.rank_source}`, chip.rank_source));
      button.addEventListener("click", () => void this.clickChip(index));
      chips.appendChild(button);
    });

    const input = this.root.querySelector<HTMLInputElement>("#query-input")!;
    const send = this.root.querySelector<HTMLButtonElement>("#send-button")!;
    send.disabled = this.state.pending || input.value.trim() === "";

    this.renderStats();
  }

  private renderStats(): void {
    const box = this.root.querySelector<HTMLDivElement>("#stats");
    if (!box) return;
    box.innerHTML = "";
    if (this.statsError) {
      box.appendChild(el("p", "stats-hidden", "stats unavailable"));
      return;
    }
    if (!this.stats) return;
    box.appendChild(el("p", "stats-total", `transitions observed: ${this.stats.total_transitions}`));
    const last = this.state.lastInvokedSkill();
    const heading = el("h3", undefined, last ? `after ${last}` : "no skill invoked yet");
    box.appendChild(heading);
    if (!last) {
      box.appendChild(el("p", "stats-empty", "click a suggestion to start the loop"));
      return;
    }
    const row = this.stats.skills.find((s) => s.skill_id === last);
    if (!row || row.top_transitions.length === 0) {
      box.appendChild(el("p", "stats-empty", "no outgoing transitions recorded"));
      return;
    }
    const list = el("ul", "stats-transitions");
    for (const t of row.top_transitions.slice(0, 5)) {
      list.appendChild(el("li", "stats-transition", `${last} → ${t.to}: ${t.count} (p=${t.prob.toFixed(3)})`));
    }
    box.appendChild(list);
  }
}

export function mountPlayground(rootId = "app"): PlaygroundApp {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`no #${rootId} element to mount on`);
  const app = new PlaygroundApp(root);
  app.init();
  return app;
}
