import type { VideoEntry } from "./types.js";

/** Unannotated videos first; stable by video id within each group. */
export function orderWorklist(videos: VideoEntry[]): VideoEntry[] {
  return videos
    .slice()
    .sort((a, b) =>
      a.annotated === b.annotated
        ? a.video_id.localeCompare(b.video_id)
        : a.annotated
          ? 1
          : -1,
    );
}

export function progressLabel(videos: VideoEntry[]): string {
  const done = videos.filter((v) => v.annotated).length;
  return `${done} / ${videos.length} annotated`;
}
