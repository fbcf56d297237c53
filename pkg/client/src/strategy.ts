/**
 * Strategic-intent scanning: keyword and phrase detection over model text,
 * reported as strategy_ping telemetry without blocking the action path.
 */

export interface StrategySignal {
  score: number;
  evidence: string;
}

/** Seed lexicon; callers may extend it from config. */
export const DEFAULT_KEYWORDS: Record<string, number> = {
  "focus fire": 0.9,
  encircle: 0.85,
  flank: 0.8,
  "protective rotation": 0.9,
  rotation: 0.6,
  "terrain advantage": 0.8,
  ambush: 0.7,
  screen: 0.6,
  withdraw: 0.5,
  "high ground": 0.7,
};

export function scanForStrategy(
  text: string,
  keywords: Record<string, number> = DEFAULT_KEYWORDS,
): StrategySignal | null {
  const lower = text.toLowerCase();
  let best: StrategySignal | null = null;
  for (const phrase of Object.keys(keywords).sort()) {
    const at = lower.indexOf(phrase);
    if (at < 0) continue;
    const score = keywords[phrase];
    if (best === null || score > best.score) {
      const start = Math.max(0, at - 40);
      const end = Math.min(text.length, at + phrase.length + 40);
      best = { score, evidence: text.slice(start, end).trim() };
    }
  }
  return best;
}
