/**
 * Review session state machine.
 *
 * Holds the item under review, the four pillar toggles, and the verdict
 * flow. The server is the source of truth for lifecycle transitions; this
 * layer only enforces what the reviewer may submit (accept needs every
 * pillar checked, reject needs a failed pillar and a written reason) and
 * translates the returned status into a badge for display.
 */
import type { ReviewApiClient } from "./client.js";
import { PILLARS } from "./wire.js";
import type { ContextBlock, Pillar, QaItem, Stats } from "./wire.js";

/** Display label for a lifecycle status. */
export function badgeForStatus(status: QaItem["status"]): string {
  switch (status) {
    case "pending":
      return "in review";
    case "accepted":
      return "accepted";
    case "rejected":
      return "awaiting regeneration";
    case "manual_correction":
      return "manual correction";
  }
}

export interface VerdictOutcome {
  qaId: string;
  decision: "accept" | "reject";
  status: QaItem["status"];
  badge: string;
}

function freshFlags(): Record<Pillar, boolean> {
  return Object.fromEntries(PILLARS.map((p) => [p, true])) as Record<
    Pillar,
    boolean
  >;
}

export class ReviewSession {
  item: QaItem | null = null;
  context: ContextBlock | null = null;
  flags: Record<Pillar, boolean> = freshFlags();
  reason = "";
  queueEmpty = false;
  lastOutcome: VerdictOutcome | null = null;
  stats: Stats | null = null;

  private listeners: Array<() => void> = [];

  constructor(
    private readonly client: ReviewApiClient,
    readonly reviewer: string,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Lease the next pending item and reset the verdict form. */
  async loadNext(): Promise<void> {
    const next = await this.client.nextItem(this.reviewer);
    this.item = next.item;
    this.context = next.context;
    this.queueEmpty = next.item === null;
    this.flags = freshFlags();
    this.reason = "";
    this.emit();
  }

  toggleFlag(pillar: Pillar): void {
    this.flags[pillar] = !this.flags[pillar];
    this.emit();
  }

  setReason(reason: string): void {
    this.reason = reason;
    this.emit();
  }

  /** Accepting asserts every pillar held up. */
  canAccept(): boolean {
    return this.item !== null && PILLARS.every((p) => this.flags[p]);
  }

  /** Rejecting needs a named failure and a reason the annotator can act on. */
  canReject(): boolean {
    return (
      this.item !== null &&
      PILLARS.some((p) => !this.flags[p]) &&
      this.reason.trim().length > 0
    );
  }

  async accept(): Promise<VerdictOutcome> {
    if (!this.canAccept()) {
      throw new Error("accept requires an item with all four pillars checked");
    }
    return this.submit("accept");
  }

  async reject(): Promise<VerdictOutcome> {
    if (!this.canReject()) {
      throw new Error("reject requires a failed pillar and a non-empty reason");
    }
    return this.submit("reject");
  }

  private async submit(decision: "accept" | "reject"): Promise<VerdictOutcome> {
    const item = this.item;
    if (item === null) throw new Error("no item under review");
    const response = await this.client.submitVerdict({
      qa_id: item.qa_id,
      decision,
      pillar_flags: this.flags,
      reason: this.reason,
      reviewer: this.reviewer,
    });
    const outcome: VerdictOutcome = {
      qaId: response.qa_id,
      decision,
      status: response.status,
      badge: badgeForStatus(response.status),
    };
    this.lastOutcome = outcome;
    this.item = null;
    this.context = null;
    this.emit();
    return outcome;
  }

  async refreshStats(): Promise<Stats> {
    this.stats = await this.client.stats();
    this.emit();
    return this.stats;
  }
}
