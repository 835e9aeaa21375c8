"""``metashield`` command-line entry point.

Every subcommand resolves the full configuration (defaults < ``--config``
file < ``--set``/specific flags), writes its outputs atomically, and records
a ``run_manifest.json`` beside them. ``metashield rerun MANIFEST`` replays a
manifest and checks that every output is byte-identical.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 internal
invariant violation.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from . import config as cfgmod
from ._validation import (
    DataFormatError,
    DegenerateInputError,
    GeometryError,
    ParameterDomainError,
    ScheduleRangeError,
)
from .evaluation import EvalReport, band_distortion, trial_similarities
from .field import gain_map
from .layout import design_layout
from .perturb import AudioClip
from .pipeline import anonymize_clip, run_pipeline
from .randomizer import DEFAULT_STEP_MM, make_schedule
from .resonator import gain_curve
from .wavio import atomic_path, read_wav, write_wav

log = logging.getLogger("metashield")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4
MANIFEST_NAME = "run_manifest.json"


class InvariantViolation(RuntimeError):
    """An output failed a post-condition the tool guarantees."""


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _dump_json(path, data):
    with atomic_path(path) as tmp:
        with open(tmp, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")


def _write_with(path, writer):
    with atomic_path(path) as tmp:
        writer(tmp)


# -- subcommand bodies -------------------------------------------------------
# Each takes (cfg, params, out_dir) and returns {output name: path}.
# ``params`` holds only JSON-serializable values so that it can be replayed.


def do_gain_curve(cfg, params, out_dir):
    g = cfg["gain_curve"]
    curve = gain_curve(cfgmod.build_spec(cfg), g["f_lo"], g["f_hi"], g["step"])
    path = os.path.join(out_dir, params["out_name"])
    _write_with(path, curve.to_csv)
    return {"gain_curve": path}


def do_design_layout(cfg, params, out_dir):
    f = cfg["field"]
    result = design_layout(cfgmod.build_scene(cfg), cfgmod.build_spec(cfg),
                           cfgmod.build_search(cfg), f["directivity_exponent"], f["coupling"])
    if result.layout.unit_angles_deg[0] != 0.0:
        raise InvariantViolation("first unit must face the speaker (0 deg)")
    path = os.path.join(out_dir, params["out_name"])
    _dump_json(path, result.to_dict())
    return {"layout": path}


def _layout_angles(cfg, params):
    if params.get("layout_path"):
        with open(params["layout_path"]) as fh:
            data = json.load(fh)
        if "unit_angles_deg" not in data:
            raise DataFormatError("layout JSON lacks 'unit_angles_deg'", params["layout_path"])
        return data["unit_angles_deg"]
    angles = cfg["gain_map"]["unit_angles_deg"]
    return [0.0] if angles is None else angles


def do_gain_map(cfg, params, out_dir):
    g = cfg["gain_map"]
    f = cfg["field"]
    layout = cfgmod.build_layout(cfg, _layout_angles(cfg, params))
    m = gain_map(layout, cfgmod.build_scene(cfg), tuple(g["theta_range_deg"]),
                 g["theta_step_deg"], cfgmod.build_spec(cfg), tuple(f["band_hz"]), f["n_freq"])
    if np.any(m.gains < 0) or np.any(m.gains > 1 + layout.coupling * len(layout.unit_angles_deg)):
        raise InvariantViolation("interference gain outside [0, 1 + sum(coupling)]")
    path = os.path.join(out_dir, params["out_name"])
    _write_with(path, m.to_csv)
    return {"gain_map": path}


def do_schedule(cfg, params, out_dir):
    spec = cfgmod.build_spec(cfg)
    slide = cfgmod.build_slide(cfg, spec)
    s = cfg["schedule"]
    step = cfg["slide"]["step_mm"]
    sched = make_schedule(cfg["seed"], s["n_frames"], s["frame_hop_s"],
                          DEFAULT_STEP_MM if step is None else step, slide, spec.c_eff)
    path = os.path.join(out_dir, params["out_name"])
    _dump_json(path, sched.to_dict())
    return {"schedule": path}


def _anonymize_one(cfg, in_path, out_path, seed):
    clip = read_wav(in_path)
    anon = anonymize_clip(clip, cfg, seed)
    if not np.all(np.isfinite(anon.samples)) or np.max(np.abs(anon.samples), initial=0) > 1.0:
        raise InvariantViolation("anonymized audio is non-finite or exceeds full scale")
    if anon.normalization != 1.0:
        log.warning("%s: peak-normalized by %.6g", out_path, anon.normalization)
    write_wav(out_path, anon, cfg["audio"]["subtype"])
    side = out_path + ".json"
    _dump_json(side, {"normalization": anon.normalization,
                      "sample_rate_hz": anon.sample_rate_hz,
                      "seed": seed})
    return anon, side


def do_anonymize(cfg, params, out_dir):
    out_path = os.path.join(out_dir, params["out_name"])
    _, side = _anonymize_one(cfg, params["in_path"], out_path, cfg["seed"])
    return {"audio": out_path, "sidecar": side}


def _read_pairs_csv(path):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["original", "anonymized"]:
            raise DataFormatError(f"pairs CSV header must be 'original,anonymized', got {header}",
                                  path, 0)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise DataFormatError(f"line {line_no}: expected 2 columns, got {len(row)}", path)
            rows.append(tuple(os.path.join(base, p) for p in row))
    if not rows:
        raise DataFormatError("pairs CSV lists no pairs", path)
    return rows


def _load_anonymized(path):
    clip = read_wav(path)
    side = path + ".json"
    if os.path.exists(side):
        with open(side) as fh:
            norm = float(json.load(fh)["normalization"])
        clip = AudioClip(clip.samples, clip.sample_rate_hz, normalization=norm)
    return clip


def do_evaluate(cfg, params, out_dir):
    pairs = [(read_wav(a), _load_anonymized(b)) for a, b in _read_pairs_csv(params["pairs_path"])]
    report = EvalReport(trial_similarities(pairs), float(cfg["eval"]["threshold"]))
    dist = [band_distortion(a, b) for a, b in pairs]
    # Worst case per band across pairs.
    report.oob_distortion_db = [(fc, max(d[i][1] for d in dist))
                                for i, (fc, _) in enumerate(dist[0])]
    return _write_report(report, out_dir, params["out_name"])


def _write_report(report, out_dir, out_name):
    path = os.path.join(out_dir, out_name)
    _dump_json(path, report.to_dict())
    stem = os.path.splitext(out_name)[0]
    trials = os.path.join(out_dir, f"{stem}_trials.csv")
    _write_with(trials, report.trials_to_csv)
    return {"report": path, "trials": trials}


def do_pipeline(cfg, params, out_dir):
    outputs = {}
    outputs.update(do_gain_curve(cfg, {"out_name": "gain_curve.csv"}, out_dir))
    outputs.update(do_design_layout(cfg, {"out_name": "layout.json"}, out_dir))
    outputs.update(do_gain_map(cfg, {"out_name": "gain_map.csv",
                                     "layout_path": outputs["layout"]}, out_dir))
    report, pairs, timing = run_pipeline(cfg)
    audio_dir = os.path.join(out_dir, "audio")
    subtype = cfg["audio"]["subtype"]
    for i, (orig, anon) in enumerate(pairs):
        for tag, clip in (("orig", orig), ("anon", anon)):
            path = os.path.join(audio_dir, f"trial{i:03d}_{tag}.wav")
            write_wav(path, clip, subtype)
            outputs[f"trial{i:03d}_{tag}"] = path
    outputs.update(_write_report(report, out_dir, "report.json"))
    timing_path = os.path.join(out_dir, "timing.json")
    _dump_json(timing_path, timing)
    outputs["timing"] = timing_path
    return outputs


COMMANDS = {
    "gain-curve": (do_gain_curve, "gain_curve.csv"),
    "design-layout": (do_design_layout, "layout.json"),
    "gain-map": (do_gain_map, "gain_map.csv"),
    "schedule": (do_schedule, "schedule.json"),
    "anonymize": (do_anonymize, "anonymized.wav"),
    "evaluate": (do_evaluate, "report.json"),
    "pipeline": (do_pipeline, None),
}
# Outputs that carry wall-clock measurements and are excluded from replay checks.
VOLATILE = {"timing"}


def _input_paths(params):
    return {k: v for k, v in params.items() if k.endswith("_path") and v}


def execute(command, cfg, params, out_dir):
    """Run ``command`` and write its manifest. Returns the manifest dict."""
    cfgmod.validate(cfg)
    func, _ = COMMANDS[command]
    os.makedirs(out_dir, exist_ok=True)
    outputs = func(cfg, params, out_dir)
    manifest = {
        "tool": "metashield",
        "version": __version__,
        "command": command,
        "seed": cfg["seed"],
        "config": cfg,
        "params": params,
        "inputs": {k: {"path": os.path.abspath(v), "sha256": sha256_file(v)}
                   for k, v in _input_paths(params).items()},
        "outputs": {
            name: {"path": os.path.relpath(path, out_dir),
                   "sha256": None if name in VOLATILE else sha256_file(path)}
            for name, path in sorted(outputs.items())
        },
    }
    _dump_json(os.path.join(out_dir, MANIFEST_NAME), manifest)
    return manifest


def rerun(manifest_path, out_dir=None):
    """Replay a manifest; return the list of outputs whose bytes differ."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    for key in ("command", "config", "params", "outputs"):
        if key not in manifest:
            raise DataFormatError(f"manifest lacks {key!r}", manifest_path)
    if manifest["command"] not in COMMANDS:
        raise DataFormatError(f"unknown command {manifest['command']!r}", manifest_path)
    for name, rec in manifest.get("inputs", {}).items():
        if sha256_file(rec["path"]) != rec["sha256"]:
            raise DataFormatError(f"input {name} changed since the manifest was written",
                                  rec["path"])
    if out_dir is None:
        out_dir = os.path.dirname(os.path.abspath(manifest_path))
    cfg = cfgmod.resolve(manifest["config"])
    params = dict(manifest["params"])
    if params.get("layout_path") and manifest["command"] == "pipeline":
        params.pop("layout_path")
    new = execute(manifest["command"], cfg, params, out_dir)
    return [name for name, rec in manifest["outputs"].items()
            if rec["sha256"] is not None
            and new["outputs"].get(name, {}).get("sha256") != rec["sha256"]]


# -- argument parsing --------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config)")
    p.add_argument("--out", help="output file (directory for 'pipeline')")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. --set field.coupling=0")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="metashield",
        description="Design and simulate a passive acoustic-metamaterial voice anonymizer.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain-curve", help="tabulate the resonator gain curve (CSV)")
    _common(p)
    p.add_argument("--f-lo", type=float)
    p.add_argument("--f-hi", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("design-layout", help="greedy multi-unit orientation search (JSON)")
    _common(p)
    p.add_argument("--max-units", type=int)
    p.add_argument("--aggregate", choices=("mean", "min"))
    p.add_argument("--unit-step", type=float)
    p.add_argument("--mic-kind", choices=("gooseneck", "handheld"))

    p = sub.add_parser("gain-map", help="interference gain over user angles (CSV)")
    _common(p)
    p.add_argument("--layout", help="layout JSON from design-layout")
    p.add_argument("--angles", help="comma-separated unit angles, e.g. 0,-120,120")
    p.add_argument("--theta-step", type=float)

    p = sub.add_parser("schedule", help="seeded slide-displacement schedule (JSON)")
    _common(p)
    p.add_argument("--frames", type=int)
    p.add_argument("--frame-hop", type=float, help="seconds per frame")

    p = sub.add_parser("anonymize", help="run a WAV file through the metamaterial channel")
    _common(p)
    p.add_argument("--in", dest="in_path", required=True, help="input WAV (mono)")
    p.add_argument("--coupling", type=float)

    p = sub.add_parser("evaluate", help="MMR and out-of-band distortion for WAV pairs")
    _common(p)
    p.add_argument("--pairs", required=True,
                   help="CSV with header 'original,anonymized' (paths relative to the CSV)")
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("pipeline", help="corpus -> anonymize -> evaluate, all outputs in --out")
    _common(p)
    p.add_argument("--coupling", type=float)

    p = sub.add_parser("rerun", help="replay a run manifest and verify byte-identical outputs")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help="write replayed outputs here instead of in place")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    return parser


def _flag_overrides(args):
    o = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("gain_curve", "f_lo", getattr(args, "f_lo", None))
    put("gain_curve", "f_hi", getattr(args, "f_hi", None))
    put("gain_curve", "step", getattr(args, "step", None))
    put("search", "max_units", getattr(args, "max_units", None))
    put("search", "aggregate", getattr(args, "aggregate", None))
    put("search", "unit_step_deg", getattr(args, "unit_step", None))
    put("scene", "mic_kind", getattr(args, "mic_kind", None))
    put("gain_map", "theta_step_deg", getattr(args, "theta_step", None))
    put("schedule", "n_frames", getattr(args, "frames", None))
    put("schedule", "frame_hop_s", getattr(args, "frame_hop", None))
    put("field", "coupling", getattr(args, "coupling", None))
    put("eval", "threshold", getattr(args, "threshold", None))
    if getattr(args, "angles", None):
        try:
            angles = [float(a) for a in args.angles.split(",")]
        except ValueError:
            raise cfgmod.ConfigError(f"--angles must be comma-separated numbers: {args.angles!r}")
        put("gain_map", "unit_angles_deg", angles)
    if args.seed is not None:
        o["seed"] = args.seed
    return o


def _resolve_cli(args):
    layers = []
    if args.config:
        layers.append(cfgmod.load(args.config))
    layers.extend(cfgmod.parse_assignment(s) for s in args.set)
    layers.append(_flag_overrides(args))
    return cfgmod.resolve(layers)


def _run(args):
    if args.command == "rerun":
        diff = rerun(args.manifest, args.out_dir)
        if diff:
            raise InvariantViolation(f"replay differs for outputs: {', '.join(diff)}")
        print(f"replay of {args.manifest}: all outputs byte-identical")
        return EXIT_OK

    cfg = _resolve_cli(args)
    _, default_name = COMMANDS[args.command]
    if args.command == "pipeline":
        out_dir = args.out or "metashield_run"
        params = {}
    else:
        out = args.out or default_name
        out_dir = os.path.dirname(os.path.abspath(out))
        params = {"out_name": os.path.basename(out)}
    for key in ("in_path",):
        if getattr(args, key, None):
            params[key] = os.path.abspath(getattr(args, key))
    if getattr(args, "layout", None):
        params["layout_path"] = os.path.abspath(args.layout)
    if getattr(args, "pairs", None):
        params["pairs_path"] = os.path.abspath(args.pairs)
    manifest = execute(args.command, cfg, params, out_dir)
    for name, rec in manifest["outputs"].items():
        print(f"{name}: {os.path.join(out_dir, rec['path'])}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except cfgmod.ConfigError as exc:
        print(f"metashield: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, ScheduleRangeError, GeometryError, DegenerateInputError,
            OSError, json.JSONDecodeError) as exc:
        print(f"metashield: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterDomainError as exc:
        print(f"metashield: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"metashield: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
