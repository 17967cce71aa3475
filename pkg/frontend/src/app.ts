/**
 * Page bootstrap: wires the API client, session state, keyboard
 * shortcuts, and renderers to the static skeleton in index.html.
 *
 * Configuration comes from the query string: ?api=<base url> (default
 * http://127.0.0.1:8000) and ?reviewer=<id> (default "reviewer").
 */
import { ReviewApiClient } from "./client.js";
import { handleReviewKey } from "./keyboard.js";
import { ReviewSession } from "./state.js";
import { renderContext, renderHelp, renderItem, renderStatus, renderVerdictForm } from "./render.js";
import { PILLARS } from "./wire.js";

function required(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`index.html is missing #${id}`);
  return node;
}

export function startApp(): void {
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "http://127.0.0.1:8000";
  const reviewer = params.get("reviewer") ?? "reviewer";

  const client = new ReviewApiClient(api);
  const session = new ReviewSession(client, reviewer);

  const itemPane = required("item");
  const contextPane = required("context");
  const formPane = required("verdict");
  const statusPane = required("status");
  const helpPane = required("help");
  let helpVisible = false;

  const repaint = (): void => {
    renderItem(itemPane, session.item);
    renderContext(contextPane, session.context);
    renderVerdictForm(formPane, session);
    renderStatus(statusPane, session);
    renderHelp(helpPane, helpVisible);
  };
  session.onChange(repaint);

  const report = (err: unknown): void => {
    statusPane.textContent = err instanceof Error ? err.message : String(err);
  };

  const next = (): void => {
    session.loadNext().then(() => session.refreshStats()).catch(report);
  };

  formPane.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.matches("button.accept") && session.canAccept()) {
      session.accept().then(next).catch(report);
    } else if (target.matches("button.reject") && session.canReject()) {
      session.reject().then(next).catch(report);
    }
  });

  window.addEventListener("keydown", (event) => {
    handleReviewKey(event, {
      onAccept: () => {
        if (session.canAccept()) session.accept().then(next).catch(report);
      },
      onReject: () => {
        if (session.canReject()) session.reject().then(next).catch(report);
      },
      onNext: next,
      onTogglePillar: (index) => {
        const pillar = PILLARS[index];
        if (pillar) session.toggleFlag(pillar);
      },
      onFocusReason: () => {
        (document.getElementById("reason") as HTMLTextAreaElement | null)?.focus();
      },
      onHelp: () => {
        helpVisible = !helpVisible;
        repaint();
      },
      onEscape: () => {
        if (helpVisible) {
          helpVisible = false;
          repaint();
        } else {
          (document.activeElement as HTMLElement | null)?.blur();
        }
      },
    });
  });

  repaint();
  next();
}

startApp();
