export type SchemaCategory = {
  name: string;
  cardinality: number;
};

export type SchemaDoc = {
  schema_version: string;
  total_features: number;
  categories: SchemaCategory[];
  feature_index: Record<string, { start: number; count: number }>;
};

export type VideoEntry = {
  video_id: string;
  patient_id: string;
  n_frames: number;
  annotated: boolean;
  annotators: string[];
};

export type AnnotationRecord = {
  video_id: string;
  biomarkers: number[];
  severity: number;
  annotator: string;
  timestamp: string;
};

export type AnnotationResponse = {
  schema_version: string;
  annotation: AnnotationRecord;
  all: AnnotationRecord[];
};

// what the UI keeps while a video is being labeled
export type Draft = {
  biomarkers: number[];
  severity: number | null;
  annotator: string;
};
