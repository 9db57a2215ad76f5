"""Command-line front end.

    sybiltag simulate --config office --seed 0 --out runs/sim
    sybiltag train    --dataset runs/sim/dataset.csv --out runs/model
    sybiltag eval     --model runs/model/model.json --dataset runs/sim/dataset.csv --out runs/eval
    sybiltag sweep    --sweep-spec profile_size --out runs/sweep
    sybiltag replay   --manifest runs/sim/manifest.json --out runs/sim-again

Every command writes ``manifest.json`` next to its outputs. The manifest holds
the fully resolved inputs (config contents, input-file digests, seed), so
``replay`` regenerates byte-identical outputs.
"""
import argparse
import csv
import datetime
import hashlib
import json
import logging
import os
import struct
import sys

import numpy as np

from . import __version__
from . import evaluation as ev
from . import forest as rf
from .exceptions import ConfigurationError
from .scene import ATTACK_MODES, ScenarioConfig, generate_trajectories, iter_slot_traces, preset
from .sigproc import trace_signature
from .similarity import EXTRACTORS, METRICS

logger = logging.getLogger("sybiltag")

MANIFEST = "manifest.json"


class CliError(Exception):
    pass


# --- config resolution --------------------------------------------------------

def _named_config(name):
    """``office``, ``rooftop``, optionally suffixed with an attack mode
    (``office-colluding``) or a corpus (``office-corpus-a``)."""
    arena, _, rest = name.partition("-")
    doc = {"preset": arena}
    if rest in ("corpus-a", "corpus-b"):
        doc["corpus"] = rest[-1].upper()
    elif rest:
        mode = rest.replace("-", "_")
        if mode not in ATTACK_MODES:
            raise ConfigurationError([("config", f"unknown config name {name!r}")])
        doc["scenario"] = {"attack_mode": mode}
    preset(arena)  # validates the arena name
    return doc


def load_simulation_config(spec):
    """Resolve ``--config`` (a JSON path or a named config) to a plain dict.

    A JSON document is either a flat ScenarioConfig dict or a wrapper::

        {"preset": "office", "noise": "moderate", "scenario": {...},
         "pipeline": {"profile_length": 10, ...}, "corpus": "A", "runs": 6}
    """
    if isinstance(spec, dict):
        return spec
    if os.path.exists(spec):
        with open(spec) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError([("config", f"{spec}: invalid JSON ({exc})")]) from None
        if not isinstance(doc, dict):
            raise ConfigurationError([("config", "top level must be a JSON object")])
        wrapper_keys = {"preset", "noise", "scenario", "pipeline", "corpus", "runs"}
        if not set(doc) & wrapper_keys:
            doc = {"scenario": doc}
        return doc
    return _named_config(spec)


def _base_scenario(doc):
    problems = [(k, "unknown key") for k in sorted(set(doc) - {"preset", "noise", "scenario", "pipeline", "corpus", "runs"})]
    if problems:
        raise ConfigurationError(problems)
    overrides = dict(doc.get("scenario", {}))
    if "preset" in doc:
        ScenarioConfig.from_dict(overrides)  # field-name check
        base = preset(doc["preset"], **overrides)
    else:
        base = ScenarioConfig.from_dict(overrides)
    if "noise" in doc:
        base = base.with_noise(doc["noise"])
    return base.validate()


def _pipeline(doc, args):
    p = dict(doc.get("pipeline", {}))
    for key in ("profile_length", "metric", "extraction"):
        val = getattr(args, key, None)
        if val is not None:
            p[key] = val
    try:
        return ev.PipelineConfig(**p).validate()
    except TypeError as exc:
        raise ConfigurationError([("pipeline", str(exc))]) from None


def _runs(doc, base, seed):
    corpus = doc.get("corpus")
    if corpus is None:
        if "runs" in doc:
            raise ConfigurationError([("runs", "only meaningful together with 'corpus'")])
        cfg = base.with_(rng_seed=seed).validate()
        return [("B" if cfg.attack_mode == "colluding" else "A", 0, cfg)]
    runs = doc.get("runs", 6)
    if not isinstance(runs, int) or runs < 1:
        raise ConfigurationError([("runs", "must be a positive integer")])
    return ev.corpus_runs(corpus, base, runs, seed)


# --- helpers ------------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out, command, args, outputs, inputs=None, config=None, config_path=None):
    manifest = {
        "command": command,
        "args": args,
        "seed": args.get("seed", 0),
        "out": out,
        "config_path": config_path,
        "config": config,
        "inputs": {k: {"path": p, "sha256": _sha256(p)} for k, p in (inputs or {}).items()},
        "outputs": {k: {"path": os.path.basename(p), "sha256": _sha256(p)} for k, p in outputs.items()},
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    _write_json(os.path.join(out, MANIFEST), manifest)
    return manifest


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else ("" if v is None else str(v))


def _write_metrics(report, out, prefix="metrics"):
    paths = {}
    d = report.to_dict()
    paths["metrics_json"] = os.path.join(out, f"{prefix}.json")
    _write_json(paths["metrics_json"], d)
    paths["metrics_csv"] = os.path.join(out, f"{prefix}.csv")
    with open(paths["metrics_csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["accuracy", "tpr", "fpr", "auroc", "tp", "fn", "fp", "tn"]
        w.writerow(cols)
        vals = {**{k: d[k] for k in cols[:4]}, **d["counts"]}
        w.writerow([_fmt(vals[c]) for c in cols])
    paths["roc_csv"] = os.path.join(out, "roc.csv")
    with open(paths["roc_csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        for a, b in (d["roc"] or []):
            w.writerow([f"{a:.6f}", f"{b:.6f}"])
    return paths


def _dump_traces(runs, out, window):
    """Raw float64 samples, little-endian and back to back, plus an index
    giving each trace's offset and length in samples."""
    bin_path = os.path.join(out, "traces.bin")
    idx_path = os.path.join(out, "traces_index.csv")
    offset = 0
    with open(bin_path, "wb") as fb, open(idx_path, "w", newline="") as fi:
        w = csv.writer(fi)
        w.writerow(["corpus", "scenario", "slot", "claimed_id", "emitter", "transmit_power",
                    "offset", "length", "ground_truth_start", "detected_start"])
        for corpus, scenario, cfg in runs:
            template = cfg.template()
            for event, trace in iter_slot_traces(cfg, generate_trajectories(cfg), template):
                samples = np.asarray(trace.samples, dtype="<f8")
                fb.write(samples.tobytes())
                _, onset = trace_signature(samples, template, window)
                w.writerow([corpus, scenario, event.slot, event.claimed_id, event.emitter,
                            f"{event.transmit_power:.6f}", offset, len(samples), trace.ground_truth_start, onset])
                offset += len(samples)
    return {"traces_bin": bin_path, "traces_index": idx_path}


def read_trace(bin_path, offset, length):
    """Load one dumped trace by its index entry."""
    with open(bin_path, "rb") as fh:
        fh.seek(offset * struct.calcsize("<d"))
        return np.frombuffer(fh.read(length * 8), dtype="<f8")


# --- commands -----------------------------------------------------------------

def cmd_simulate(args):
    doc = load_simulation_config(args.config)
    base = _base_scenario(doc)
    pipeline = _pipeline(doc, args)
    runs = _runs(doc, base, args.seed)
    os.makedirs(args.out, exist_ok=True)
    ds = ev.build_dataset(runs, pipeline)
    outputs = {"dataset": os.path.join(args.out, "dataset.csv"),
               "provenance": os.path.join(args.out, "provenance.csv")}
    ds.write_csv(outputs["dataset"], outputs["provenance"])
    if args.dump_traces:
        outputs.update(_dump_traces(runs, args.out, pipeline.smoothing_window))
    pos = int(ds.labels.sum())
    print(f"simulated {len(runs)} run(s): {len(ds)} samples ({pos} fake, {len(ds) - pos} legit), "
          f"{ds.dropped_windows} window(s) dropped -> {outputs['dataset']}")
    resolved = {"config": doc, "seed": args.seed, "profile_length": pipeline.profile_length,
                "metric": pipeline.metric, "extraction": pipeline.extraction, "dump_traces": bool(args.dump_traces)}
    config_path = args.config if isinstance(args.config, str) and os.path.exists(args.config) else None
    _write_manifest(args.out, "simulate", resolved, outputs, config=doc, config_path=config_path)
    return 0


def _read_dataset(path):
    if not os.path.exists(path):
        raise CliError(f"dataset {path} not found")
    return ev.LabeledDataset.read_csv(path)


def cmd_train(args):
    ds = _read_dataset(args.dataset)
    if len(set(ds.labels.tolist())) < 2:
        raise CliError(f"{args.dataset}: training needs both classes, found only {sorted(set(ds.labels.tolist()))}")
    model = rf.train_forest(ds.features, ds.labels, H=args.trees, seed=args.seed,
                            sort_enabled=not args.no_sort, z=args.z, max_depth=args.max_depth)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "model.json")
    model.save(path)
    train_acc = float(np.mean(rf.predict(model, ds.features) == ds.labels))
    depths = [t.depth() for t in model.trees]
    print(f"trained {model.H} trees (z={model.z}, L={model.L}, sort={'on' if model.sort_enabled else 'off'}) "
          f"on {len(ds)} samples; training accuracy {train_acc:.4f}; depth {min(depths)}-{max(depths)} -> {path}")
    resolved = {"dataset": args.dataset, "seed": args.seed, "trees": args.trees, "no_sort": bool(args.no_sort),
                "z": args.z, "max_depth": args.max_depth}
    _write_manifest(args.out, "train", resolved, {"model": path}, inputs={"dataset": args.dataset})
    return 0


def cmd_eval(args):
    if not os.path.exists(args.model):
        raise CliError(f"model {args.model} not found")
    model = rf.ForestModel.load(args.model)
    ds = _read_dataset(args.dataset)
    if ds.L != model.L:
        raise CliError(f"dimension mismatch: model expects L={model.L}, dataset {args.dataset} has L={ds.L}")
    report, preds, scores = ev.evaluate(model, ds)
    os.makedirs(args.out, exist_ok=True)
    outputs = _write_metrics(report, args.out)
    outputs["predictions"] = os.path.join(args.out, "predictions.csv")
    with open(outputs["predictions"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "label", "score", "prediction"])
        for i, (y, s, p) in enumerate(zip(ds.labels, scores, preds)):
            w.writerow([i, int(y), f"{s:.6f}", int(p)])
    auroc = "undefined" if report.auroc is None else f"{report.auroc:.4f}"
    print(f"accuracy {report.accuracy:.4f}  tpr {report.tpr:.4f}  fpr {report.fpr:.4f}  auroc {auroc}")
    resolved = {"model": args.model, "dataset": args.dataset, "seed": args.seed}
    _write_manifest(args.out, "eval", resolved, outputs, inputs={"model": args.model, "dataset": args.dataset})
    return 0


def load_sweep_spec(spec):
    if isinstance(spec, dict):
        return spec
    if os.path.exists(spec):
        with open(spec) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError([("sweep-spec", f"{spec}: invalid JSON ({exc})")]) from None
    return ev.builtin_sweep(spec)


def cmd_sweep(args):
    spec = load_sweep_spec(args.sweep_spec)
    rows = ev.run_sweep(spec, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    outputs = {"sweep_csv": os.path.join(args.out, "sweep.csv"),
               "sweep_json": os.path.join(args.out, "sweep.json"),
               "sweep_roc": os.path.join(args.out, "sweep_roc.csv")}
    ev.write_sweep(rows, outputs["sweep_csv"], outputs["sweep_json"], outputs["sweep_roc"])
    print(f"sweep {spec.get('name', '(custom)')}: {len(rows)} cells -> {outputs['sweep_csv']}")
    config_path = args.sweep_spec if isinstance(args.sweep_spec, str) and os.path.exists(args.sweep_spec) else None
    _write_manifest(args.out, "sweep", {"sweep_spec": spec, "seed": args.seed}, outputs,
                    config=spec, config_path=config_path)
    return 0


def cmd_replay(args):
    with open(args.manifest) as fh:
        m = json.load(fh)
    for name, rec in m.get("inputs", {}).items():
        if not os.path.exists(rec["path"]):
            raise CliError(f"replay input {name} ({rec['path']}) is missing")
        if _sha256(rec["path"]) != rec["sha256"]:
            raise CliError(f"replay input {name} ({rec['path']}) changed since the manifest was written")
    a = dict(m["args"])
    out = args.out or m["out"]
    ns = argparse.Namespace(out=out, seed=a.get("seed", 0))
    cmd = m["command"]
    if cmd == "simulate":
        ns.config = a["config"]
        ns.profile_length, ns.metric, ns.extraction = a["profile_length"], a["metric"], a["extraction"]
        ns.dump_traces = a.get("dump_traces", False)
    elif cmd == "train":
        ns.dataset, ns.trees, ns.no_sort, ns.z, ns.max_depth = a["dataset"], a["trees"], a["no_sort"], a["z"], a["max_depth"]
    elif cmd == "eval":
        ns.model, ns.dataset = a["model"], a["dataset"]
    elif cmd == "sweep":
        ns.sweep_spec = a["sweep_spec"]
    else:
        raise CliError(f"manifest names unknown command {cmd!r}")
    rc = COMMANDS[cmd](ns)
    with open(os.path.join(out, MANIFEST)) as fh:
        fresh = json.load(fh)
    for name, rec in m["outputs"].items():
        got = fresh["outputs"].get(name, {}).get("sha256")
        if got != rec["sha256"]:
            print(f"replay mismatch: {name} differs from the manifest digest", file=sys.stderr)
            rc = 1
    if rc == 0:
        print(f"replay of {cmd}: all {len(m['outputs'])} outputs match the manifest")
    return rc


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep, "replay": cmd_replay}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    p = argparse.ArgumentParser(prog="sybiltag", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate scenarios and build a labeled dataset")
    s.add_argument("--config", default="office",
                   help="JSON config file or a name such as office, rooftop-colluding, office-corpus-a")
    s.add_argument("--profile-length", dest="profile_length", type=int)
    s.add_argument("--metric", choices=METRICS)
    s.add_argument("--extraction", choices=sorted(EXTRACTORS))
    s.add_argument("--dump-traces", dest="dump_traces", action="store_true",
                   help="also write raw traces (traces.bin + traces_index.csv)")

    t = sub.add_parser("train", parents=[common], help="train a forest on a dataset CSV")
    t.add_argument("--dataset", required=True)
    t.add_argument("--trees", type=int, default=30)
    t.add_argument("--no-sort", dest="no_sort", action="store_true", help="skip sorting feature vectors")
    t.add_argument("--z", type=int, help="features drawn per node (default floor(log2 L))")
    t.add_argument("--max-depth", dest="max_depth", type=int)

    e = sub.add_parser("eval", parents=[common], help="score a dataset with a trained model")
    e.add_argument("--model", required=True)
    e.add_argument("--dataset", required=True)

    w = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    w.add_argument("--sweep-spec", dest="sweep_spec", required=True,
                   help="JSON sweep spec or a builtin: profile_size, metric, trees")

    r = sub.add_parser("replay", help="re-run a command from its manifest and check the outputs")
    r.add_argument("--manifest", required=True)
    r.add_argument("--out", help="output directory (default: the manifest's)")
    r.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    if args.command not in ("replay",) and not args.out:
        args.out = os.path.join("runs", args.command)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print("invalid configuration:", file=sys.stderr)
        for fld, msg in exc.problems:
            print(f"  {fld}: {msg}", file=sys.stderr)
        return 2
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
