/**
 * TypeScript bindings for the xraycast Python package.
 *
 * Each call spawns the Python bridge (frontend/bridge.py), exchanging JSON
 * with arrays encoded as little-endian float64 buffers in base64, so results
 * are bit-identical to what the library computes natively. Arrays are
 * validated at the boundary: only Float64Array payloads are accepted and
 * shapes must match their declared element counts.
 */

import { spawnSync } from "node:child_process";
import { fileURLToPath } from "node:url";

const BRIDGE_PATH = fileURLToPath(new URL("../bridge.py", import.meta.url));
const PYTHON = process.env.XRAYCAST_PYTHON ?? "python3";

export class BindingError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BindingError";
  }
}

export interface NdArray {
  shape: number[];
  data: Float64Array;
}

export interface Volume {
  values: NdArray; // shape [nx, ny, nz]
  spacingMm: [number, number, number];
  originMm: [number, number, number];
  kind?: "density" | "mask";
}

export interface Geometry {
  mode: "cone_beam" | "parallel_beam";
  sourceToAxisMm: number;
  axisToDetectorMm: number;
  detectorSizePx: [number, number];
  detectorPitchMm: [number, number];
  stepMm: number;
}

export interface Pose {
  azimuthDeg: number;
  elevationDeg: number;
  translationMm?: [number, number, number];
}

export interface SpectrumBin {
  energyKeV: number;
  weight: number;
  muBonePerMm: number;
  muTissuePerMm: number;
}

export interface Spectrum {
  bins: SpectrumBin[];
  tissueWeight?: number;
}

export interface Radiograph {
  atten: NdArray;
  values: NdArray;
}

export interface SuppressionResult {
  tReconTissue: NdArray; // shape [bins, nv, nu]
  suppressed: Radiograph;
  reconstructionResidual: number;
  clampCount: number;
  alpha: number;
}

/** Geometry constructor mirroring the library's JSON schema, with defaults. */
export function makeGeometry(partial: Partial<Geometry> = {}): Geometry {
  const g: Geometry = {
    mode: partial.mode ?? "cone_beam",
    sourceToAxisMm: partial.sourceToAxisMm ?? 1000.0,
    axisToDetectorMm: partial.axisToDetectorMm ?? 500.0,
    detectorSizePx: partial.detectorSizePx ?? [256, 256],
    detectorPitchMm: partial.detectorPitchMm ?? [2.0, 2.0],
    stepMm: partial.stepMm ?? 0.5,
  };
  if (g.mode !== "cone_beam" && g.mode !== "parallel_beam") {
    throw new BindingError(`mode must be cone_beam or parallel_beam, got ${g.mode}`);
  }
  if (g.stepMm <= 0 || g.detectorPitchMm.some((p) => p <= 0)) {
    throw new BindingError("stepMm and detectorPitchMm must be > 0");
  }
  if (g.detectorSizePx.some((n) => !Number.isInteger(n) || n < 1)) {
    throw new BindingError("detectorSizePx must be positive integers");
  }
  return g;
}

/** Spectrum constructor mirroring the library's JSON schema. */
export function makeSpectrum(
  bins: SpectrumBin[],
  tissueWeight: number = 1.0,
): Spectrum {
  if (bins.length < 1) throw new BindingError("spectrum needs at least one bin");
  for (const b of bins) {
    if (b.weight <= 0 || b.muBonePerMm <= 0 || b.muTissuePerMm <= 0) {
      throw new BindingError("bin weights and attenuation coefficients must be > 0");
    }
  }
  if (tissueWeight <= 0) throw new BindingError("tissueWeight must be > 0");
  return { bins, tissueWeight };
}

export function makeVolume(
  values: NdArray,
  spacingMm: [number, number, number],
  originMm: [number, number, number],
  kind: "density" | "mask" = "density",
): Volume {
  checkArray("values", values, 3);
  if (spacingMm.some((s) => s <= 0)) {
    throw new BindingError("spacingMm must be > 0");
  }
  return { values, spacingMm, originMm, kind };
}

function checkArray(name: string, arr: NdArray, ndim?: number): void {
  if (!(arr.data instanceof Float64Array)) {
    const got = (arr.data as object | null | undefined)?.constructor?.name ?? typeof arr.data;
    throw new BindingError(`${name}: expected dtype float64 (Float64Array), got ${got}`);
  }
  const count = arr.shape.reduce((a, b) => a * b, 1);
  if (count !== arr.data.length) {
    throw new BindingError(
      `${name}: shape [${arr.shape}] implies ${count} elements, buffer has ${arr.data.length}`,
    );
  }
  if (ndim !== undefined && arr.shape.length !== ndim) {
    throw new BindingError(`${name}: expected ${ndim}-d shape, got [${arr.shape}]`);
  }
}

function encodeArray(arr: NdArray): object {
  // Both sides are little-endian; the buffer travels verbatim.
  const buf = Buffer.from(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength);
  return { shape: arr.shape, dtype: "float64", data: buf.toString("base64") };
}

function decodeArray(obj: { shape: number[]; dtype: string; data: string }): NdArray {
  const buf = Buffer.from(obj.data, "base64");
  const data = new Float64Array(buf.buffer, buf.byteOffset, buf.byteLength / 8);
  return { shape: obj.shape, data: new Float64Array(data) };
}

function encodeVolume(v: Volume): object {
  checkArray("volume.values", v.values, 3);
  return {
    values: encodeArray(v.values),
    spacing_mm: v.spacingMm,
    origin_mm: v.originMm,
    kind: v.kind ?? "density",
  };
}

function encodeGeometry(g: Geometry): object {
  return {
    mode: g.mode,
    source_to_axis_mm: g.sourceToAxisMm,
    axis_to_detector_mm: g.axisToDetectorMm,
    detector_size_px: g.detectorSizePx,
    detector_pitch_mm: g.detectorPitchMm,
    step_mm: g.stepMm,
  };
}

function encodePose(p: Pose): object {
  return {
    azimuth_deg: p.azimuthDeg,
    elevation_deg: p.elevationDeg,
    translation_mm: p.translationMm ?? [0, 0, 0],
  };
}

function encodeSpectrum(s: Spectrum): object {
  return {
    bins: s.bins.map((b) => ({
      energy_keV: b.energyKeV,
      weight: b.weight,
      mu_bone_per_mm: b.muBonePerMm,
      mu_tissue_per_mm: b.muTissuePerMm,
    })),
    tissue_weight: s.tissueWeight ?? 1.0,
  };
}

type BridgeRequest = { op: string; args: Record<string, unknown> };

function invokeBridge(payload: object): any {
  const proc = spawnSync(PYTHON, [BRIDGE_PATH], {
    input: JSON.stringify(payload),
    encoding: "utf8",
    maxBuffer: 1 << 30,
  });
  if (proc.error) throw new BindingError(`bridge spawn failed: ${proc.error.message}`);
  if (proc.status !== 0) {
    throw new BindingError(`bridge exited with ${proc.status}: ${proc.stderr}`);
  }
  const reply = JSON.parse(proc.stdout);
  if (!reply.ok) throw new BindingError(`${reply.error}: ${reply.message}`);
  return reply;
}

function callOne(req: BridgeRequest): any {
  return invokeBridge(req).result;
}

/** Run several requests in a single bridge process (used by parity tests). */
export function callBatch(reqs: BridgeRequest[]): any[] {
  return invokeBridge({ batch: reqs }).results;
}

/** Build the raw bridge request for an operation without executing it. */
export const requests = {
  forwardProject(volume: Volume, geometry: Geometry, pose: Pose): BridgeRequest {
    return {
      op: "forward_project",
      args: {
        volume: encodeVolume(volume),
        geometry: encodeGeometry(geometry),
        pose: encodePose(pose),
      },
    };
  },
  forwardProjectVjp(
    volume: Volume,
    geometry: Geometry,
    pose: Pose,
    cotangent: NdArray,
  ): BridgeRequest {
    checkArray("cotangent", cotangent, 2);
    return {
      op: "forward_project_vjp",
      args: {
        volume: encodeVolume(volume),
        geometry: encodeGeometry(geometry),
        pose: encodePose(pose),
        cotangent: encodeArray(cotangent),
      },
    };
  },
  backprojectSingle(
    image: NdArray,
    geometry: Geometry,
    pose: Pose,
    like: Volume,
  ): BridgeRequest {
    checkArray("image", image, 2);
    return {
      op: "backproject_single",
      args: {
        image: encodeArray(image),
        geometry: encodeGeometry(geometry),
        pose: encodePose(pose),
        like: encodeVolume(like),
      },
    };
  },
  ct2xray(
    volume: Volume,
    mask: Volume,
    geometry: Geometry,
    pose: Pose,
    spectrum: Spectrum,
  ): BridgeRequest {
    return {
      op: "ct2xray",
      args: {
        volume: encodeVolume(volume),
        mask: encodeVolume(mask),
        geometry: encodeGeometry(geometry),
        pose: encodePose(pose),
        spectrum: encodeSpectrum(spectrum),
      },
    };
  },
  ct2xrayFromThickness(
    tBone: NdArray,
    tTissue: NdArray,
    spectrum: Spectrum,
  ): BridgeRequest {
    checkArray("tBone", tBone, 2);
    checkArray("tTissue", tTissue, 2);
    return {
      op: "ct2xray_from_thickness",
      args: {
        t_bone: encodeArray(tBone),
        t_tissue: encodeArray(tTissue),
        spectrum: encodeSpectrum(spectrum),
      },
    };
  },
  gradientCt2xrayWrtVolume(
    volume: Volume,
    mask: Volume,
    geometry: Geometry,
    pose: Pose,
    spectrum: Spectrum,
    cotangent: NdArray,
  ): BridgeRequest {
    checkArray("cotangent", cotangent, 2);
    return {
      op: "gradient_ct2xray_wrt_volume",
      args: {
        volume: encodeVolume(volume),
        mask: encodeVolume(mask),
        geometry: encodeGeometry(geometry),
        pose: encodePose(pose),
        spectrum: encodeSpectrum(spectrum),
        cotangent: encodeArray(cotangent),
      },
    };
  },
  suppress(
    image: NdArray,
    tBone: NdArray,
    tTissue: NdArray,
    spectrum: Spectrum,
    alpha: number = 0.0,
    epsilonLog: number = 1e-12,
  ): BridgeRequest {
    checkArray("image", image, 2);
    checkArray("tBone", tBone, 2);
    checkArray("tTissue", tTissue, 2);
    return {
      op: "suppress",
      args: {
        image: encodeArray(image),
        t_bone: encodeArray(tBone),
        t_tissue: encodeArray(tTissue),
        spectrum: encodeSpectrum(spectrum),
        alpha,
        epsilon_log: epsilonLog,
      },
    };
  },
};

export function forwardProject(volume: Volume, geometry: Geometry, pose: Pose): NdArray {
  return decodeArray(callOne(requests.forwardProject(volume, geometry, pose)).values);
}

export function forwardProjectVjp(
  volume: Volume,
  geometry: Geometry,
  pose: Pose,
  cotangent: NdArray,
): NdArray {
  return decodeArray(
    callOne(requests.forwardProjectVjp(volume, geometry, pose, cotangent)).values,
  );
}

export function backprojectSingle(
  image: NdArray,
  geometry: Geometry,
  pose: Pose,
  like: Volume,
): NdArray {
  return decodeArray(
    callOne(requests.backprojectSingle(image, geometry, pose, like)).values,
  );
}

export function ct2xray(
  volume: Volume,
  mask: Volume,
  geometry: Geometry,
  pose: Pose,
  spectrum: Spectrum,
): Radiograph {
  const r = callOne(requests.ct2xray(volume, mask, geometry, pose, spectrum));
  return { atten: decodeArray(r.atten), values: decodeArray(r.values) };
}

export function ct2xrayFromThickness(
  tBone: NdArray,
  tTissue: NdArray,
  spectrum: Spectrum,
): Radiograph {
  const r = callOne(requests.ct2xrayFromThickness(tBone, tTissue, spectrum));
  return { atten: decodeArray(r.atten), values: decodeArray(r.values) };
}

export function gradientCt2xrayWrtVolume(
  volume: Volume,
  mask: Volume,
  geometry: Geometry,
  pose: Pose,
  spectrum: Spectrum,
  cotangent: NdArray,
): NdArray {
  return decodeArray(
    callOne(
      requests.gradientCt2xrayWrtVolume(volume, mask, geometry, pose, spectrum, cotangent),
    ).values,
  );
}

export function suppress(
  image: NdArray,
  tBone: NdArray,
  tTissue: NdArray,
  spectrum: Spectrum,
  alpha: number = 0.0,
  epsilonLog: number = 1e-12,
): SuppressionResult {
  const r = callOne(requests.suppress(image, tBone, tTissue, spectrum, alpha, epsilonLog));
  return {
    tReconTissue: decodeArray(r.t_recon_tissue),
    suppressed: {
      atten: decodeArray(r.suppressed_atten),
      values: decodeArray(r.suppressed_values),
    },
    reconstructionResidual: r.reconstruction_residual,
    clampCount: r.clamp_count,
    alpha: r.alpha,
  };
}

export { decodeArray as _decodeArray };
