/** Wire types for the uqvol render service. */

export interface TFPoint {
  x: number;
  rgba: [number, number, number, number];
}

export interface TransferFunctionSpec {
  points: TFPoint[];
  lookup_resolution?: number;
}

export interface CameraSpec {
  eye: [number, number, number];
  look_at: [number, number, number];
  up: [number, number, number];
  fov_deg: number;
  width: number;
  height: number;
}

export interface ModelInfo {
  tag: string;
  method: 'none' | 'mcdropout' | 'ensemble';
  dims: [number, number, number];
  default_m: number;
}

export interface RenderRequest {
  model: string;
  tf: TransferFunctionSpec;
  camera?: CameraSpec;
  m?: number;
  rate?: number;
  seed?: number;
  step?: number;
  width?: number;
  height?: number;
  include_error?: boolean;
  /** Pins the grayscale normalization scale; omit for per-image. */
  scale?: number;
}

export interface RenderResponse {
  model: string;
  method: string;
  m: number;
  mean_png_b64: string;
  uncertainty_png_b64: string;
  uncertainty_r_png_b64: string;
  uncertainty_g_png_b64: string;
  uncertainty_b_png_b64: string;
  uncertainty_scale: number;
  error_png_b64?: string;
  psnr_db?: number | null;
  rmse?: number;
  render_ms: number;
  scale_mode?: 'per-image' | 'pinned';
}
