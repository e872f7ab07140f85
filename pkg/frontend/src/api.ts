import type {
  AnnotationRecord,
  AnnotationResponse,
  SchemaDoc,
  VideoEntry,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new ApiError(res.status, await res.json().catch(() => res.statusText));
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  getSchema(): Promise<SchemaDoc> {
    return getJson(`${this.baseUrl}/api/schema`);
  }

  async listVideos(): Promise<VideoEntry[]> {
    const body = await getJson<{ videos: VideoEntry[] }>(`${this.baseUrl}/api/videos`);
    return body.videos;
  }

  frameUrl(videoId: string, frame: number): string {
    return `${this.baseUrl}/api/videos/${videoId}/frames?i=${frame}`;
  }

  /** null when the video has no annotation yet. */
  async getAnnotation(videoId: string): Promise<AnnotationResponse | null> {
    const res = await fetch(`${this.baseUrl}/api/videos/${videoId}/annotation`);
    if (res.status === 404) return null;
    if (!res.ok) throw new ApiError(res.status, await res.json().catch(() => null));
    return (await res.json()) as AnnotationResponse;
  }

  async postAnnotation(
    videoId: string,
    payload: { biomarkers: number[]; severity: number; annotator: string },
  ): Promise<AnnotationRecord> {
    const res = await fetch(`${this.baseUrl}/api/videos/${videoId}/annotation`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!res.ok) throw new ApiError(res.status, await res.json().catch(() => null));
    const body = (await res.json()) as { annotation: AnnotationRecord };
    return body.annotation;
  }
}
