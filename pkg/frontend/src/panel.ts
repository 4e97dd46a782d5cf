/**
 * Decision feed view models: badge + text per arbitration decision.
 * Pure functions so the feed logic is testable without a DOM.
 */

import { DecisionEntry } from "./state.js";

export interface DecisionView {
  badge: "human" | "autonomy" | "alternative" | "fallback";
  badgeLabel: string;
  plan: string;
  intent: string;
  rationale: string;
  latencyText: string;
  frame: number;
}

export function decisionView(entry: DecisionEntry): DecisionView {
  const d = entry.payload;
  if (d.fallback) {
    return {
      badge: "fallback",
      badgeLabel: "safe stop fallback",
      plan: d.grounded_plan,
      intent: d.intent,
      rationale: d.rationale,
      latencyText: "-",
      frame: d.frame,
    };
  }
  const labels = {
    human: "HUMAN",
    autonomy: "AUTONOMY",
    alternative: "ALTERNATIVE",
  } as const;
  return {
    badge: d.choice,
    badgeLabel: labels[d.choice],
    plan: d.grounded_plan,
    intent: d.intent,
    rationale: d.rationale,
    latencyText: "live",
    frame: d.frame,
  };
}

/** Feed rendered newest-last; input must already be seq-sorted by the store. */
export function decisionFeedViews(entries: DecisionEntry[]): DecisionView[] {
  return entries.map(decisionView);
}
