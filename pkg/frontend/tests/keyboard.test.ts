/**
 * Shortcut dispatch: key to action mapping plus the typing guard.
 */
import { describe, expect, it, vi } from "vitest";

import { handleReviewKey, reviewShortcuts } from "../src/keyboard.js";
import type { ShortcutActions } from "../src/keyboard.js";

function actions(): Required<ShortcutActions> {
  return {
    onAccept: vi.fn(),
    onReject: vi.fn(),
    onNext: vi.fn(),
    onTogglePillar: vi.fn(),
    onFocusReason: vi.fn(),
    onHelp: vi.fn(),
    onEscape: vi.fn(),
  };
}

describe("handleReviewKey", () => {
  it("maps the single-key shortcuts", () => {
    const a = actions();
    expect(handleReviewKey({ key: "a" }, a)).toBe(true);
    expect(handleReviewKey({ key: "r" }, a)).toBe(true);
    expect(handleReviewKey({ key: "n" }, a)).toBe(true);
    expect(handleReviewKey({ key: "?" }, a)).toBe(true);
    expect(a.onAccept).toHaveBeenCalledOnce();
    expect(a.onReject).toHaveBeenCalledOnce();
    expect(a.onNext).toHaveBeenCalledOnce();
    expect(a.onHelp).toHaveBeenCalledOnce();
  });

  it("maps 1-4 to zero-based pillar indices", () => {
    const a = actions();
    for (const key of ["1", "2", "3", "4"]) handleReviewKey({ key }, a);
    expect(a.onTogglePillar.mock.calls.map((c) => c[0])).toEqual([0, 1, 2, 3]);
  });

  it("ignores keys with a held modifier", () => {
    const a = actions();
    expect(handleReviewKey({ key: "a", ctrlKey: true }, a)).toBe(false);
    expect(handleReviewKey({ key: "a", metaKey: true }, a)).toBe(false);
    expect(a.onAccept).not.toHaveBeenCalled();
  });

  it("lets everything except Escape through while typing", () => {
    const a = actions();
    const textarea = { tagName: "TEXTAREA" };
    expect(handleReviewKey({ key: "a", target: textarea }, a)).toBe(false);
    expect(handleReviewKey({ key: "r", target: textarea }, a)).toBe(false);
    expect(a.onAccept).not.toHaveBeenCalled();
    expect(a.onReject).not.toHaveBeenCalled();

    expect(handleReviewKey({ key: "Escape", target: textarea }, a)).toBe(true);
    expect(a.onEscape).toHaveBeenCalledOnce();
  });

  it("prevents the default only for handled keys", () => {
    const a = actions();
    const handled = { key: "a", preventDefault: vi.fn() };
    const passed = { key: "x", preventDefault: vi.fn() };
    handleReviewKey(handled, a);
    handleReviewKey(passed, a);
    expect(handled.preventDefault).toHaveBeenCalledOnce();
    expect(passed.preventDefault).not.toHaveBeenCalled();
  });

  it("documents every bound key in the help list", () => {
    const keys = reviewShortcuts.map((s) => s.key);
    for (const key of ["n", "a", "r", "1-4", "e", "?", "Esc"]) {
      expect(keys).toContain(key);
    }
  });
});
