/**
 * DOM rendering for the review page.
 *
 * Small, direct functions: each takes a container element and paints the
 * current state into it. No virtual DOM, no templates; the page is one
 * item at a time and repaints are cheap.
 */
import { reviewShortcuts } from "./keyboard.js";
import { badgeForStatus } from "./state.js";
import type { ReviewSession } from "./state.js";
import { PILLARS } from "./wire.js";
import type { ContextBlock, QaItem } from "./wire.js";

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

function badgeNode(status: QaItem["status"]): HTMLElement {
  const badge = el("span", `badge badge-${status}`, badgeForStatus(status));
  badge.dataset["status"] = status;
  return badge;
}

export function renderItem(container: HTMLElement, item: QaItem | null): void {
  container.replaceChildren();
  if (item === null) {
    container.append(el("p", "empty", "Queue is empty. Press n to re-check."));
    return;
  }
  const head = el("div", "item-head");
  head.append(
    el("span", "task", item.task),
    el("span", "difficulty", item.difficulty),
    el("span", "cycle", `cycle ${item.cycle}`),
    badgeNode(item.status),
  );
  const evidence = el("ul", "evidence");
  for (const ev of item.evidence) {
    evidence.append(
      el(
        "li",
        undefined,
        `${ev.modality} [${ev.t_start}, ${ev.t_end}) "${ev.excerpt}"`,
      ),
    );
  }
  container.append(
    head,
    el("h2", "question", item.question),
    el("p", "answer", `Answer: ${item.answer}`),
    el("p", "reasoning", item.reasoning),
    evidence,
  );
}

export function renderContext(
  container: HTMLElement,
  context: ContextBlock | null,
): void {
  container.replaceChildren();
  if (context === null) {
    container.append(el("p", "empty", "No timeline context for this video."));
    return;
  }
  container.append(
    el("h3", undefined, context.video_id),
    el("pre", "timeline", context.rendered),
  );
}

export function renderVerdictForm(
  container: HTMLElement,
  session: ReviewSession,
): void {
  container.replaceChildren();
  const pillars = el("div", "pillars");
  PILLARS.forEach((pillar, index) => {
    const label = el("label", "pillar");
    const box = el("input") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = session.flags[pillar];
    box.addEventListener("change", () => session.toggleFlag(pillar));
    label.append(box, ` ${index + 1}. ${pillar}`);
    pillars.append(label);
  });

  const reason = el("textarea", "reason") as HTMLTextAreaElement;
  reason.id = "reason";
  reason.placeholder = "Why does this item fail? Required to reject.";
  reason.value = session.reason;
  reason.addEventListener("input", () => session.setReason(reason.value));

  const accept = el("button", "accept", "Accept (a)") as HTMLButtonElement;
  accept.disabled = !session.canAccept();
  const reject = el("button", "reject", "Reject (r)") as HTMLButtonElement;
  reject.disabled = !session.canReject();

  container.append(pillars, reason, accept, reject);
}

export function renderStatus(container: HTMLElement, session: ReviewSession): void {
  container.replaceChildren();
  if (session.lastOutcome) {
    const note = el(
      "span",
      "outcome",
      `${session.lastOutcome.qaId}: ${session.lastOutcome.badge}`,
    );
    note.dataset["status"] = session.lastOutcome.status;
    container.append(note);
  }
  if (session.stats) {
    const parts = Object.entries(session.stats.by_status)
      .map(([status, count]) => `${status}: ${count}`)
      .join("  ");
    container.append(el("span", "stats", `${session.stats.total} items  ${parts}`));
  }
}

export function renderHelp(container: HTMLElement, visible: boolean): void {
  container.replaceChildren();
  container.hidden = !visible;
  if (!visible) return;
  const list = el("dl", "shortcuts");
  for (const shortcut of reviewShortcuts) {
    list.append(el("dt", undefined, shortcut.key), el("dd", undefined, shortcut.description));
  }
  container.append(el("h3", undefined, "Keyboard shortcuts"), list);
}
