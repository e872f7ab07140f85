import type { Draft } from "./types.js";

/** Subset of the Storage interface, so tests can pass a plain map. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const KEY_PREFIX = "lusbio.draft.";

export function emptyDraft(totalFeatures: number, annotator = ""): Draft {
  return {
    biomarkers: new Array(totalFeatures).fill(0),
    severity: null,
    annotator,
  };
}

export function toggleFeature(draft: Draft, index: number): Draft {
  if (index < 0 || index >= draft.biomarkers.length) {
    throw new RangeError(`feature index ${index} out of range`);
  }
  const biomarkers = draft.biomarkers.slice();
  biomarkers[index] = biomarkers[index] ? 0 : 1;
  return { ...draft, biomarkers };
}

/** Submittable once a severity grade has been picked. */
export function draftComplete(draft: Draft): boolean {
  return draft.severity !== null && draft.annotator.trim().length > 0;
}

export function saveDraft(store: KeyValueStore, videoId: string, draft: Draft): void {
  store.setItem(KEY_PREFIX + videoId, JSON.stringify(draft));
}

export function loadDraft(
  store: KeyValueStore,
  videoId: string,
  totalFeatures: number,
): Draft | null {
  const raw = store.getItem(KEY_PREFIX + videoId);
  if (raw === null) return null;
  try {
    const parsed = JSON.parse(raw) as Draft;
    if (!Array.isArray(parsed.biomarkers) || parsed.biomarkers.length !== totalFeatures) {
      return null; // schema changed since the draft was written
    }
    return parsed;
  } catch {
    return null;
  }
}

export function clearDraft(store: KeyValueStore, videoId: string): void {
  store.removeItem(KEY_PREFIX + videoId);
}
