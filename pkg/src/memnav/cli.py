"""Command-line interface.

Subcommands::

    memnav generate --scenario NAME|PATH --out DIR
    memnav run      --scenario NAME|PATH --policy P --out DIR [--object I] [flags]
    memnav run      --replay DIR/run.json --out DIR2
    memnav compare  --scenario NAME|PATH [...] --policy P --policy Q [...] --out DIR
    memnav metrics  --pred DIR --gt DIR [--out FILE]

Exit status: 0 on success, 2 for configuration or usage errors, 1 when an
internal invariant is violated. ``MEMNAV_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .engine import POLICIES, SessionConfig, evaluate, run_session
from .errors import ConfigError, MemnavError
from .masks import read_rle, write_rle
from .metrics import DEFAULT_TOLERANCE_PX, frame_scores, jf_mean
from .scenario import BUILTIN_NAMES, ScenarioConfig, builtin_suite, generate

SEED_ENV = "MEMNAV_SEED"
FRAME_FILE = re.compile(r"frame_(\d+)\.rle$")

# CLI flag -> SessionConfig field
SESSION_FLAGS = {
    "k": "k", "pathways": "pathways", "pe_scale": "pe_scale",
    "capacity_factor": "capacity_factor", "tau_d": "tau_d", "tau_a": "tau_a",
    "dfm_cap": "dfm_cap", "dam_reduction": "dam_reduction",
    "tau_iou": "tau_iou", "tau_obj": "tau_obj", "max_pool": "max_pool",
    "n_groups": "n_groups", "group_size": "group_size",
    "concept": "concept", "tau_div": "tau_div", "tau_scene": "tau_scene",
    "alpha": "concept_alpha", "n_keyframes": "n_keyframes",
}


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(SEED_ENV, f"must be an integer, got {raw!r}") from None


def resolve_scenario(source: str, seed: int | None) -> ScenarioConfig:
    """Builtin name or path to a JSON config, with an optional seed override."""
    if seed is None:
        seed = _env_seed()
    if source in BUILTIN_NAMES:
        return builtin_suite(source, seed)
    path = Path(source)
    if not path.is_file():
        raise ConfigError("scenario", f"{source!r} is neither a builtin "
                          f"({', '.join(BUILTIN_NAMES)}) nor a config file")
    cfg = ScenarioConfig.load(path)
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()


def session_config(args, policy: str) -> SessionConfig:
    values = {"policy": policy}
    for flag, name in SESSION_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        values["seed"] = seed
    return SessionConfig(**values).validate()


def _objects(arg: str | None, cfg: ScenarioConfig, default_all: bool) -> list[int]:
    n = len(cfg.objects)
    if arg is None:
        return list(range(n)) if default_all else [0]
    if arg == "all":
        return list(range(n))
    try:
        ids = [int(x) for x in arg.split(",")]
    except ValueError:
        raise ConfigError("object", f"expected 'all' or comma-separated indices, got {arg!r}") from None
    for i in ids:
        if not 0 <= i < n:
            raise ConfigError("object", f"index {i} out of range for {n} objects")
    return ids


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="ascii", newline="\n")


def _metadata(subcommand: str, scenario: ScenarioConfig, source: str, sessions: list[dict],
              objects: list[int], tolerance: int, outputs: list[str]) -> str:
    doc = {
        "memnav_version": __version__,
        "subcommand": subcommand,
        "scenario_source": source,
        "scenario": scenario.to_dict(),
        "sessions": sessions,
        "objects": objects,
        "tolerance_px": tolerance,
        "outputs": sorted(outputs),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = resolve_scenario(args.scenario, args.seed)
    out = Path(args.out)
    sc = generate(cfg)
    _write_text(out / "scenario.json", cfg.to_json())
    for oid in range(len(cfg.objects)):
        for t in range(1, sc.num_frames + 1):
            p = out / "gt" / f"obj{oid}" / f"frame_{t:04d}.rle"
            p.parent.mkdir(parents=True, exist_ok=True)
            write_rle(p, sc.gt_mask(oid, t))
    print(f"wrote {sc.num_frames} frames x {len(cfg.objects)} objects to {out}")
    return 0


def _run_one(cfg: ScenarioConfig, source: str, scfg: SessionConfig, objects: list[int],
             tolerance: int, out: Path) -> list:
    sc = generate(cfg)
    outputs, reports = [], []
    for oid in objects:
        rec = run_session(sc, oid, scfg)
        for fr in rec.frames:
            rel = f"masks/obj{oid}/frame_{fr.index:04d}.rle"
            p = out / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            write_rle(p, fr.mask)
            outputs.append(rel)
        rep = evaluate(rec, sc, oid, tolerance)
        rel = f"metrics_obj{oid}.csv"
        _write_text(out / rel, rep.to_csv())
        outputs.append(rel)
        reports.append((oid, rep))
    meta = _metadata("run", cfg, source, [scfg.to_dict()], objects, tolerance, outputs + ["run.json"])
    _write_text(out / "run.json", meta)
    return reports


def cmd_run(args) -> int:
    out = Path(args.out)
    if args.replay:
        try:
            meta = json.loads(Path(args.replay).read_text())
            cfg = ScenarioConfig.from_dict(meta["scenario"])
            scfg = SessionConfig.from_dict(meta["sessions"][0])
            objects, tol, source = meta["objects"], meta["tolerance_px"], meta["scenario_source"]
        except (OSError, KeyError, IndexError, json.JSONDecodeError) as e:
            raise ConfigError("replay", f"unreadable run metadata: {e}") from None
    else:
        if args.scenario is None or args.policy is None:
            raise ConfigError("scenario" if args.scenario is None else "policy",
                              "required unless --replay is given")
        cfg = resolve_scenario(args.scenario, args.seed)
        scfg = session_config(args, args.policy)
        objects = _objects(args.object, cfg, default_all=True)
        tol, source = args.tolerance, args.scenario
    for oid, rep in _run_one(cfg, source, scfg, objects, tol, out):
        print(f"object {oid}: J={rep.j:.4f} F={rep.f:.4f} J&F={rep.jf:.4f}")
    return 0


def cmd_compare(args) -> int:
    policies = [p for group in args.policy for p in group.split(",") if p]
    bad = [p for p in policies if p not in POLICIES]
    if bad:
        raise ConfigError("policy", f"invalid {bad[0]!r}; choose from {{{','.join(POLICIES)}}}")
    if len(policies) < 2:
        raise ConfigError("policy", "compare needs at least two policies")
    out = Path(args.out)
    sessions = [session_config(args, p) for p in policies]
    outputs = []
    text_blocks = []
    metas = []
    for source in args.scenario:
        cfg = resolve_scenario(source, args.seed)
        objects = _objects(args.object, cfg, default_all=False)
        sc = generate(cfg)
        jobs = [(scfg, oid) for scfg in sessions for oid in objects]

        def job(item):
            scfg, oid = item
            return evaluate(run_session(sc, oid, scfg), sc, oid, args.tolerance)

        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(job, jobs))

        rows = []
        for pi, scfg in enumerate(sessions):
            reps = reports[pi * len(objects):(pi + 1) * len(objects)]
            j = sum(r.j for r in reps) / len(reps)
            f = sum(r.f for r in reps) / len(reps)
            rows.append((scfg.policy, j, f, (j + f) / 2.0))

        name = Path(source).stem if source not in BUILTIN_NAMES else source
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["policy", "j", "f", "jf"])
        for r in rows:
            w.writerow([r[0], f"{r[1]:.6f}", f"{r[2]:.6f}", f"{r[3]:.6f}"])
        rel = f"compare_{name}.csv"
        _write_text(out / rel, buf.getvalue())
        outputs.append(rel)
        text_blocks.append(format_table(name, rows))
        metas.append({"source": source, "scenario": cfg.to_dict(), "objects": objects})

    text = "\n".join(text_blocks)
    _write_text(out / "compare.txt", text)
    outputs.append("compare.txt")
    doc = {
        "memnav_version": __version__,
        "subcommand": "compare",
        "scenarios": metas,
        "sessions": [s.to_dict() for s in sessions],
        "tolerance_px": args.tolerance,
        "outputs": sorted(outputs + ["run.json"]),
    }
    _write_text(out / "run.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(text)
    return 0


def format_table(title: str, rows) -> str:
    header = ("policy", "J", "F", "J&F")
    cells = [header] + [(p, f"{j:.4f}", f"{f:.4f}", f"{jf:.4f}") for p, j, f, jf in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(4)]
    lines = [f"[{title}]"]
    for r in cells:
        lines.append("  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i])
                               for i, c in enumerate(r)))
    return "\n".join(lines) + "\n"


def _frame_files(directory: Path) -> dict[int, Path]:
    files = {}
    for p in sorted(directory.iterdir()):
        m = FRAME_FILE.search(p.name)
        if m:
            files[int(m.group(1))] = p
    return files


def cmd_metrics(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for name, d in (("pred", pred_dir), ("gt", gt_dir)):
        if not d.is_dir():
            raise ConfigError(name, f"{d} is not a directory")
    pred, gt = _frame_files(pred_dir), _frame_files(gt_dir)
    frames = sorted(set(pred) & set(gt))
    if not frames:
        raise ConfigError("pred", "no frame_NNNN.rle files shared by --pred and --gt")
    rows = [(t, *frame_scores(read_rle(pred[t]), read_rle(gt[t]), args.tolerance))
            for t in frames]
    text = jf_mean(rows).to_csv()
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------------

def _add_session_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("policy parameters")
    g.add_argument("--k", type=int, help="candidate masks per frame (default 3)")
    g.add_argument("--pathways", type=int, help="tree pathway count P (default 3)")
    g.add_argument("--pe-scale", dest="pe_scale", type=float, help="encoding norm added to features (default 0.1)")
    g.add_argument("--capacity-factor", dest="capacity_factor", type=int, help="DAM ram = factor x 6 (default 5)")
    g.add_argument("--tau-d", dest="tau_d", type=float, help="DAM admission threshold (default 0.5)")
    g.add_argument("--tau-a", dest="tau_a", type=float, help="DAM anchor promotion threshold (default 0.8)")
    g.add_argument("--dfm-cap", dest="dfm_cap", type=int, help="DAM anchor set size (default 4)")
    g.add_argument("--dam-reduction", dest="dam_reduction", choices=("anchor", "max"))
    g.add_argument("--tau-iou", dest="tau_iou", type=float, help="pool IoU threshold (default 0.7)")
    g.add_argument("--tau-obj", dest="tau_obj", type=float, help="pool object-score threshold (default 0.7)")
    g.add_argument("--max-pool", dest="max_pool", type=int, help="pool capacity (default 256)")
    g.add_argument("--n-groups", dest="n_groups", type=int, help="pool group count (default 2)")
    g.add_argument("--group-size", dest="group_size", type=int, help="pool group size (default 6)")
    g.add_argument("--concept", dest="concept", action=argparse.BooleanOptionalAction,
                   default=None, help="enable concept guidance (default off)")
    g.add_argument("--tau-div", dest="tau_div", type=float, help="keyframe diversity threshold (default 0.8)")
    g.add_argument("--tau-scene", dest="tau_scene", type=float, help="scene-change threshold (default 0.3)")
    g.add_argument("--alpha", dest="alpha", type=float, help="concept blend weight (default 0.5)")
    g.add_argument("--n-keyframes", dest="n_keyframes", type=int, help="keyframe capacity (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memnav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"memnav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render a scenario's config and ground-truth masks")
    p.add_argument("--scenario", required=True, help="builtin name or config JSON path")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="track objects with one policy")
    p.add_argument("--scenario", help="builtin name or config JSON path")
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--object", help="'all' (default) or comma-separated object indices")
    p.add_argument("--seed", type=int)
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE_PX, help="F boundary tolerance in pixels")
    p.add_argument("--replay", help="re-run from a run.json written by a previous run")
    p.add_argument("--out", required=True)
    _add_session_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run several policies on identical scenarios")
    p.add_argument("--scenario", required=True, action="append", help="repeatable")
    p.add_argument("--policy", required=True, action="append",
                   help="repeatable or comma-separated, from {fifo,dam,tree,pool}")
    p.add_argument("--object", help="object indices to average over (default 0)")
    p.add_argument("--seed", type=int)
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE_PX)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--out", required=True)
    _add_session_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("metrics", help="score predicted RLE masks against ground truth")
    p.add_argument("--pred", required=True, help="directory of frame_NNNN.rle predictions")
    p.add_argument("--gt", required=True, help="directory of frame_NNNN.rle ground truth")
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE_PX)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"memnav: config error: {e}", file=sys.stderr)
        return 2
    except MemnavError as e:
        print(f"memnav: internal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
