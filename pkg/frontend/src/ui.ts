import type { ApiClient } from "./api.js";
import {
  clearDraft,
  draftComplete,
  emptyDraft,
  loadDraft,
  saveDraft,
  toggleFeature,
  type KeyValueStore,
} from "./drafts.js";
import type { AnnotationRecord, Draft, SchemaDoc, VideoEntry } from "./types.js";
import { orderWorklist, progressLabel } from "./worklist.js";

export const SEVERITY_GRADES = [0, 1, 2, 3];

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

/**
 * One fieldset per schema category, one checkbox per feature. The layout is
 * driven entirely by the document served by the backend, so a schema change
 * needs no frontend edit.
 */
export function renderChecklist(
  container: HTMLElement,
  schema: SchemaDoc,
  draft: Draft,
  onToggle: (index: number) => void,
): void {
  container.textContent = "";
  let offset = 0;
  for (const cat of schema.categories) {
    const group = el("fieldset", "category");
    group.appendChild(el("legend", undefined, cat.name));
    for (let i = 0; i < cat.cardinality; i++) {
      const index = offset + i;
      const label = el("label", "feature");
      const box = el("input");
      box.type = "checkbox";
      box.dataset.featureIndex = String(index);
      box.checked = draft.biomarkers[index] === 1;
      box.addEventListener("change", () => onToggle(index));
      label.appendChild(box);
      label.appendChild(document.createTextNode(` ${i}`));
      group.appendChild(label);
    }
    offset += cat.cardinality;
    container.appendChild(group);
  }
}

export function renderSeverity(
  container: HTMLElement,
  severity: number | null,
  onPick: (grade: number) => void,
): void {
  container.textContent = "";
  const group = el("fieldset", "severity");
  group.appendChild(el("legend", undefined, "Severity grade (required)"));
  for (const grade of SEVERITY_GRADES) {
    const label = el("label");
    const radio = el("input");
    radio.type = "radio";
    radio.name = "severity";
    radio.value = String(grade);
    radio.checked = severity === grade;
    radio.addEventListener("change", () => onPick(grade));
    label.appendChild(radio);
    label.appendChild(document.createTextNode(` ${grade}`));
    group.appendChild(label);
  }
  container.appendChild(group);
}

export function renderPrior(container: HTMLElement, records: AnnotationRecord[]): void {
  container.textContent = "";
  if (records.length === 0) return;
  container.appendChild(el("h3", undefined, "Existing annotations"));
  for (const rec of records) {
    const marked = rec.biomarkers.reduce((a, b) => a + b, 0);
    container.appendChild(
      el(
        "div",
        "prior",
        `${rec.annotator} @ ${rec.timestamp}: severity ${rec.severity}, ` +
          `${marked} features marked`,
      ),
    );
  }
}

type AppState = {
  schema: SchemaDoc;
  videos: VideoEntry[];
  current: VideoEntry | null;
  draft: Draft;
  frame: number;
};

export async function createApp(
  root: HTMLElement,
  api: ApiClient,
  storage: KeyValueStore,
): Promise<void> {
  const schema = await api.getSchema();
  const state: AppState = {
    schema,
    videos: await api.listVideos(),
    current: null,
    draft: emptyDraft(schema.total_features),
    frame: 0,
  };

  root.textContent = "";
  const worklist = el("div", "worklist");
  const viewer = el("div", "viewer");
  const frameImg = el("img", "frame");
  const scrub = el("input", "scrub");
  scrub.type = "range";
  const panel = el("div", "panel");
  const annotatorInput = el("input", "annotator");
  annotatorInput.placeholder = "annotator name";
  const checklist = el("div", "checklist");
  const severityBox = el("div", "severity-box");
  const prior = el("div", "prior-box");
  const submit = el("button", "submit", "Submit");
  const status = el("div", "status");
  viewer.append(frameImg, scrub);
  panel.append(annotatorInput, checklist, severityBox, submit, status, prior);
  root.append(worklist, viewer, panel);

  function persistDraft() {
    if (state.current) saveDraft(storage, state.current.video_id, state.draft);
  }

  function redrawPanel() {
    renderChecklist(checklist, state.schema, state.draft, (index) => {
      state.draft = toggleFeature(state.draft, index);
      persistDraft();
      redrawPanel();
    });
    renderSeverity(severityBox, state.draft.severity, (grade) => {
      state.draft = { ...state.draft, severity: grade };
      persistDraft();
      redrawPanel();
    });
    submit.disabled = !draftComplete(state.draft) || state.current === null;
  }

  function redrawWorklist() {
    worklist.textContent = "";
    worklist.appendChild(el("div", "progress", progressLabel(state.videos)));
    for (const video of orderWorklist(state.videos)) {
      const row = el(
        "button",
        video.annotated ? "video done" : "video todo",
        `${video.video_id}${video.annotated ? " (done)" : ""}`,
      );
      row.dataset.videoId = video.video_id;
      row.addEventListener("click", () => void selectVideo(video));
      worklist.appendChild(row);
    }
  }

  function showFrame() {
    if (!state.current) return;
    frameImg.src = api.frameUrl(state.current.video_id, state.frame);
  }

  async function selectVideo(video: VideoEntry) {
    state.current = video;
    state.frame = 0;
    scrub.min = "0";
    scrub.max = String(video.n_frames - 1);
    scrub.value = "0";
    state.draft =
      loadDraft(storage, video.video_id, state.schema.total_features) ??
      emptyDraft(state.schema.total_features, annotatorInput.value);
    const existing = await api.getAnnotation(video.video_id);
    renderPrior(prior, existing ? existing.all : []);
    showFrame();
    redrawPanel();
  }

  annotatorInput.addEventListener("input", () => {
    state.draft = { ...state.draft, annotator: annotatorInput.value };
    persistDraft();
    redrawPanel();
  });

  scrub.addEventListener("input", () => {
    state.frame = Number(scrub.value);
    showFrame();
  });

  submit.addEventListener("click", () => {
    void (async () => {
      if (!state.current || state.draft.severity === null) return;
      try {
        await api.postAnnotation(state.current.video_id, {
          biomarkers: state.draft.biomarkers,
          severity: state.draft.severity,
          annotator: state.draft.annotator,
        });
        clearDraft(storage, state.current.video_id);
        status.textContent = `saved ${state.current.video_id}`;
        state.videos = await api.listVideos();
        redrawWorklist();
        const existing = await api.getAnnotation(state.current.video_id);
        renderPrior(prior, existing ? existing.all : []);
      } catch (err) {
        status.textContent = `rejected: ${String(err)}`;
      }
    })();
  });

  redrawWorklist();
  redrawPanel();
}
