// Wire types, field for field what the service emits. The try-on endpoint
// names its image image_png_b64 while the edit endpoints use
// image_png_base64; both spellings are part of the contract.

export type Manifest = {
  hash: string;
  version: string;
};

export type HealthzResponse = {
  stages_loaded: number;
  status: string;
  manifest: Manifest;
};

export type GarmentItem = {
  id: string;
  texture_kind: string;
  width: number;
  height: number;
};

export type GarmentsResponse = {
  garments: GarmentItem[];
  manifest: Manifest;
};

export type TryonRequest = {
  garment_id: string;
  fixture_id?: string;
  person_png_b64?: string;
  parsing_png_b64?: string;
  pose_keypoints?: (number[] | null)[];
};

export type TryonResponse = {
  garment_id: string;
  image_png_b64: string;
  warped_texture_png_b64: string;
  manifest: Manifest;
};

export type CodeSummary = {
  regions: string[];
  shape_latent_dim: number;
  texture_feature_dim: number;
  shape_norm_per_region: number[];
  texture_norm_per_region: number[];
};

export type EditStartRequest = {
  fixture_id?: string;
  editable_regions: string[];
};

export type EditStartResponse = {
  session_id: string;
  fixture_id: string;
  score: number;
  code_summary: CodeSummary;
  image_png_base64: string;
  manifest: Manifest;
};

export type EditStepRequest = {
  session_id: string;
  editable_regions?: string[];
  steps: number;
  step_size: number;
  budget: number;
  components: string[];
};

export type EditStepResponse = {
  session_id: string;
  score_trace: number[];
  code_delta_norm: number;
  steps_accepted: number;
  image_png_base64: string;
  manifest: Manifest;
};

export type EditResetRequest = {
  session_id: string;
};

export type EditResetResponse = {
  session_id: string;
  score: number;
  code_delta_norm: number;
  image_png_base64: string;
  manifest: Manifest;
};
