import { describe, expect, it } from "vitest";

import {
  clearDraft,
  draftComplete,
  emptyDraft,
  loadDraft,
  saveDraft,
  toggleFeature,
  type KeyValueStore,
} from "../src/drafts.js";

function memoryStore(): KeyValueStore {
  const map = new Map<string, string>();
  return {
    getItem: (k) => map.get(k) ?? null,
    setItem: (k, v) => void map.set(k, v),
    removeItem: (k) => void map.delete(k),
  };
}

describe("draft model", () => {
  it("starts all-zero with no severity", () => {
    const d = emptyDraft(38);
    expect(d.biomarkers).toHaveLength(38);
    expect(d.biomarkers.every((v) => v === 0)).toBe(true);
    expect(d.severity).toBeNull();
  });

  it("toggle flips exactly one feature and is pure", () => {
    const a = emptyDraft(5);
    const b = toggleFeature(a, 2);
    expect(b.biomarkers).toEqual([0, 0, 1, 0, 0]);
    expect(a.biomarkers).toEqual([0, 0, 0, 0, 0]);
    expect(toggleFeature(b, 2).biomarkers).toEqual([0, 0, 0, 0, 0]);
  });

  it("toggle rejects an out-of-range index", () => {
    expect(() => toggleFeature(emptyDraft(5), 5)).toThrow(RangeError);
  });

  it("requires severity and annotator before submit", () => {
    const d = emptyDraft(3, "kim");
    expect(draftComplete(d)).toBe(false);
    expect(draftComplete({ ...d, severity: 0 })).toBe(true);
    expect(draftComplete({ ...d, severity: 0, annotator: "  " })).toBe(false);
  });
});

describe("draft persistence", () => {
  it("round-trips through the store", () => {
    const store = memoryStore();
    const d = { ...toggleFeature(emptyDraft(4, "kim"), 1), severity: 3 };
    saveDraft(store, "v1", d);
    expect(loadDraft(store, "v1", 4)).toEqual(d);
  });

  it("returns null for missing, cleared, or stale drafts", () => {
    const store = memoryStore();
    expect(loadDraft(store, "v1", 4)).toBeNull();
    saveDraft(store, "v1", emptyDraft(4));
    clearDraft(store, "v1");
    expect(loadDraft(store, "v1", 4)).toBeNull();
    saveDraft(store, "v2", emptyDraft(3)); // written under an older schema
    expect(loadDraft(store, "v2", 4)).toBeNull();
  });

  it("drafts are keyed per video", () => {
    const store = memoryStore();
    saveDraft(store, "v1", { ...emptyDraft(2), severity: 1 });
    saveDraft(store, "v2", { ...emptyDraft(2), severity: 2 });
    expect(loadDraft(store, "v1", 2)?.severity).toBe(1);
    expect(loadDraft(store, "v2", 2)?.severity).toBe(2);
  });
});
