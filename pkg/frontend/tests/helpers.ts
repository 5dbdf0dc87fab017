import { NdArray, Volume, Geometry, Pose, Spectrum, makeGeometry, makeSpectrum, makeVolume } from "../src/index.js";

/** Deterministic xorshift PRNG so failures are reproducible. */
export function makeRng(seed: number): () => number {
  let s = seed >>> 0 || 1;
  return () => {
    s ^= s << 13;
    s >>>= 0;
    s ^= s >> 17;
    s ^= s << 5;
    s >>>= 0;
    return s / 4294967296;
  };
}

export function randomArray(rng: () => number, shape: number[], offset = 0): NdArray {
  const n = shape.reduce((a, b) => a * b, 1);
  const data = new Float64Array(n);
  for (let i = 0; i < n; i++) data[i] = rng() + offset;
  return { shape, data };
}

export function randomVolume(rng: () => number, dims: number, spacing: number): Volume {
  const origin = (-(dims - 1) / 2) * spacing;
  return makeVolume(
    randomArray(rng, [dims, dims, dims]),
    [spacing, spacing, spacing],
    [origin, origin, origin],
  );
}

export function randomMask(rng: () => number, dims: number, spacing: number): Volume {
  const origin = (-(dims - 1) / 2) * spacing;
  const arr = randomArray(rng, [dims, dims, dims]);
  for (let i = 0; i < arr.data.length; i++) arr.data[i] = arr.data[i] > 0.5 ? 1 : 0;
  return makeVolume(arr, [spacing, spacing, spacing], [origin, origin, origin], "mask");
}

export function randomPose(rng: () => number): Pose {
  return { azimuthDeg: (rng() - 0.5) * 40, elevationDeg: (rng() - 0.5) * 40 };
}

export function smallGeometry(rng: () => number): Geometry {
  return makeGeometry({
    mode: rng() > 0.5 ? "cone_beam" : "parallel_beam",
    detectorSizePx: [6, 5],
    detectorPitchMm: [4.0, 4.0],
    stepMm: 1.0,
  });
}

export function randomSpectrum(rng: () => number): Spectrum {
  const n = 1 + Math.floor(rng() * 3);
  const bins = Array.from({ length: n }, (_, i) => ({
    energyKeV: 40 + 20 * i,
    weight: 0.1 + rng(),
    muBonePerMm: 0.01 + 0.1 * rng(),
    muTissuePerMm: 0.005 + 0.03 * rng(),
  }));
  return makeSpectrum(bins, 0.5 + rng());
}

export function dot(a: Float64Array, b: Float64Array): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i] * b[i];
  return s;
}

export function bitwiseEqual(a: Float64Array, b: Float64Array): boolean {
  if (a.length !== b.length) return false;
  const ua = new BigUint64Array(a.buffer, a.byteOffset, a.length);
  const ub = new BigUint64Array(b.buffer, b.byteOffset, b.length);
  for (let i = 0; i < a.length; i++) if (ua[i] !== ub[i]) return false;
  return true;
}
