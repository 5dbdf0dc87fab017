"""JSON/stdio bridge between the TypeScript bindings and the xraycast
package.

Reads one JSON request object (or {"batch": [...]}) from stdin and writes
one JSON response to stdout. Arrays travel as little-endian float64 buffers
in base64 with an explicit shape, so the binding layer can be checked for
bit-exact fidelity. Only the xraycast public API is used.
"""

import base64
import json
import sys

import numpy as np

import xraycast as xc


def decode_array(obj):
    if obj.get("dtype") != "float64":
        raise ValueError(f"expected dtype float64, got {obj.get('dtype')!r}")
    flat = np.frombuffer(base64.b64decode(obj["data"]), dtype="<f8")
    return flat.reshape(obj["shape"]).copy()


def encode_array(arr):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "dtype": "float64",
            "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def decode_volume(obj, kind="density"):
    return xc.VoxelVolume(decode_array(obj["values"]),
                          tuple(obj["spacing_mm"]), tuple(obj["origin_mm"]),
                          kind=obj.get("kind", kind))


def decode_geometry(obj):
    return xc.ProjectionGeometry.from_json_dict(obj)


def decode_pose(obj):
    return xc.make_pose(obj["azimuth_deg"], obj["elevation_deg"],
                        tuple(obj.get("translation_mm", (0.0, 0.0, 0.0))))


def decode_spectrum(obj):
    bins = tuple(xc.SpectrumBin(b["energy_keV"], b["weight"],
                                b["mu_bone_per_mm"], b["mu_tissue_per_mm"])
                 for b in obj["bins"])
    return xc.MaterialSpectrum(bins, obj.get("tissue_weight", 1.0))


def decode_tmap(obj, geometry, pose):
    return xc.ThicknessMap(decode_array(obj), geometry, pose)


def handle(req):
    op = req["op"]
    a = req["args"]
    if op == "forward_project":
        out = xc.forward_project(decode_volume(a["volume"]),
                                 decode_geometry(a["geometry"]),
                                 decode_pose(a["pose"]))
        return {"values": encode_array(out.values)}
    if op == "forward_project_vjp":
        geometry = decode_geometry(a["geometry"])
        pose = decode_pose(a["pose"])
        out = xc.forward_project_vjp(decode_volume(a["volume"]), geometry,
                                     pose,
                                     decode_tmap(a["cotangent"], geometry,
                                                 pose))
        return {"values": encode_array(out.values)}
    if op == "backproject_single":
        geometry = decode_geometry(a["geometry"])
        pose = decode_pose(a["pose"])
        out = xc.backproject_single(decode_tmap(a["image"], geometry, pose),
                                    geometry, pose,
                                    decode_volume(a["like"]))
        return {"values": encode_array(out.values)}
    if op == "ct2xray":
        out = xc.ct2xray(decode_volume(a["volume"]),
                         decode_volume(a["mask"], kind="mask"),
                         decode_geometry(a["geometry"]),
                         decode_pose(a["pose"]),
                         decode_spectrum(a["spectrum"]))
        return {"atten": encode_array(out.atten),
                "values": encode_array(out.values)}
    if op == "ct2xray_from_thickness":
        out = xc.ct2xray_from_thickness(decode_array(a["t_bone"]),
                                        decode_array(a["t_tissue"]),
                                        decode_spectrum(a["spectrum"]))
        return {"atten": encode_array(out.atten),
                "values": encode_array(out.values)}
    if op == "gradient_ct2xray_wrt_volume":
        out = xc.gradient_ct2xray_wrt_volume(
            decode_volume(a["volume"]), decode_volume(a["mask"], kind="mask"),
            decode_geometry(a["geometry"]), decode_pose(a["pose"]),
            decode_spectrum(a["spectrum"]), decode_array(a["cotangent"]))
        return {"values": encode_array(out.values)}
    if op == "suppress":
        cfg = xc.SuppressionConfig(alpha=a.get("alpha", 0.0),
                                   epsilon_log=a.get("epsilon_log", 1e-12))
        res = xc.suppress(decode_array(a["image"]), decode_array(a["t_bone"]),
                          decode_array(a["t_tissue"]),
                          decode_spectrum(a["spectrum"]), cfg)
        return {"t_recon_tissue": encode_array(res.t_recon_tissue),
                "suppressed_atten": encode_array(res.suppressed.atten),
                "suppressed_values": encode_array(res.suppressed.values),
                "reconstruction_residual": res.reconstruction_residual,
                "clamp_count": res.clamp_count,
                "alpha": res.alpha}
    raise ValueError(f"unknown op {op!r}")


def main():
    req = json.load(sys.stdin)
    try:
        if "batch" in req:
            result = {"ok": True,
                      "results": [handle(r) for r in req["batch"]]}
        else:
            result = {"ok": True, "result": handle(req)}
    except Exception as e:  # surfaced to the binding as a typed error
        result = {"ok": False, "error": type(e).__name__, "message": str(e)}
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
