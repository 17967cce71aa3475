/**
 * Keyboard shortcuts for the review queue.
 *
 * Maps single keys to review actions. Shortcuts stay out of the way while
 * the reviewer is typing a rejection reason: only Escape is handled from
 * inside an input, a textarea, or anything content-editable.
 */

export interface ShortcutActions {
  onAccept?: () => void;
  onReject?: () => void;
  onNext?: () => void;
  onTogglePillar?: (index: number) => void;
  onFocusReason?: () => void;
  onHelp?: () => void;
  onEscape?: () => void;
}

/** Structural subset of KeyboardEvent, so tests can pass plain objects. */
export interface KeyLikeEvent {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
  target?: unknown;
  preventDefault?: () => void;
}

interface EditableTarget {
  tagName?: string;
  isContentEditable?: boolean;
}

function isTypingTarget(target: unknown): boolean {
  const el = target as EditableTarget | null;
  if (!el) return false;
  return (
    el.tagName === "INPUT" ||
    el.tagName === "TEXTAREA" ||
    el.isContentEditable === true
  );
}

/**
 * Dispatch one key event to the matching action.
 *
 * Returns true when the key was handled (and default prevented), false
 * when it should fall through to the browser.
 */
export function handleReviewKey(
  event: KeyLikeEvent,
  actions: ShortcutActions,
): boolean {
  if (event.ctrlKey || event.metaKey || event.altKey) return false;

  if (isTypingTarget(event.target)) {
    if (event.key === "Escape" && actions.onEscape) {
      actions.onEscape();
      return true;
    }
    return false;
  }

  let handled = true;
  switch (event.key) {
    case "a":
      actions.onAccept?.();
      break;
    case "r":
      actions.onReject?.();
      break;
    case "n":
      actions.onNext?.();
      break;
    case "1":
    case "2":
    case "3":
    case "4":
      actions.onTogglePillar?.(Number(event.key) - 1);
      break;
    case "e":
      actions.onFocusReason?.();
      break;
    case "?":
      actions.onHelp?.();
      break;
    case "Escape":
      actions.onEscape?.();
      break;
    default:
      handled = false;
  }
  if (handled) event.preventDefault?.();
  return handled;
}

/** Help text, rendered by the ? overlay. */
export const reviewShortcuts = [
  { key: "n", description: "Lease the next pending item" },
  { key: "a", description: "Accept (all four pillars must be checked)" },
  { key: "r", description: "Reject (needs a failed pillar and a reason)" },
  { key: "1-4", description: "Toggle pillar: Accuracy, Traceability, Discriminability, CommercialRelevance" },
  { key: "e", description: "Focus the reason box" },
  { key: "?", description: "Toggle this help" },
  { key: "Esc", description: "Close help / leave the reason box" },
] as const;
