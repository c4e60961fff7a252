"""Command-line entry points: gen | train | infer | eval | serve.

Every subcommand exits nonzero on failure after printing a single
machine-parsable line to stderr:

    ERROR {"code": "<ExceptionType>", "message": "..."}

Defaults can come from a JSON config file (--config) and the environment
(URBANWIND_CHECKPOINT, URBANWIND_PORT), with explicit flags winning.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio, inference, metrics, models, oracle, scene as sc, synth, train
from .checkpoint import Surrogate


def _fail(exc: Exception) -> int:
    line = json.dumps({"code": type(exc).__name__, "message": str(exc)})
    print(f"ERROR {line}", file=sys.stderr)
    return 1


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _comfort_from(args) -> metrics.ComfortSpec:
    if getattr(args, "comfort_config", None):
        return metrics.load_comfort_spec(args.comfort_config)
    return metrics.ComfortSpec()


def cmd_gen(args) -> int:
    if bool(args.scene_dir) == bool(args.synthetic):
        raise ValueError("provide exactly one of --scene-dir or --synthetic N")
    if args.scene_dir:
        paths = sorted(Path(args.scene_dir).glob("*.json"))
        if not paths:
            raise FileNotFoundError(f"no scene documents in {args.scene_dir}")
        scenes = [sc.load_scene(p) for p in paths]
    else:
        scenes = synth.random_scenes(args.synthetic, seed=args.scene_seed)
    directions = sc.DIRECTIONS if args.directions == "all" else [
        sc.CardinalDirection(d.strip()) for d in args.directions.split(",")]
    cfg = oracle.SolverConfig(
        inlet_speed=args.inlet,
        residual_tol=args.tol,
        max_iters=args.max_iters,
        viscosity=args.viscosity,
    )
    manifest = dataio.generate_dataset(
        scenes, args.out,
        directions=directions,
        slice_heights=[float(s) for s in args.slices.split(",")],
        solver_cfg=cfg,
        grid=args.grid,
        split_ratio=args.split_ratio,
        split_seed=args.split_seed,
        workers=args.workers,
    )
    print(f"wrote {len(manifest.entries)} entries "
          f"({len(manifest.failures)} failures) to {args.out}/manifest.json")
    return 0


def cmd_train(args) -> int:
    manifest = dataio.load_manifest(args.manifest, validate=False)
    root = Path(args.manifest).parent
    tc = train.TrainConfig(
        lr=args.lr, lambda_l1=args.lambda_l1, epochs=args.epochs, batch=args.batch,
        seed=args.seed, checkpoint_every=args.checkpoint_every,
    )
    gc = models.GeneratorConfig(input_size=args.size, base_width=args.base_width)
    dc = models.DiscriminatorConfig(receptive_field=args.rf, width=args.base_width)
    ckpt_path, logs = train.train(
        manifest, root, tc, gc, dc, args.out,
        progress=lambda l: print(
            f"epoch {l.epoch}/{tc.epochs}: l1={l.l1:.4f} advG={l.adv_g:.3f} "
            f"advD={l.adv_d:.3f} ({l.seconds:.1f}s)", flush=True),
    )
    print(f"checkpoint: {ckpt_path}")
    return 0


def cmd_infer(args) -> int:
    surrogate = Surrogate.from_checkpoint(args.checkpoint)
    if bool(args.scene) == bool(args.input):
        raise ValueError("provide exactly one of --scene or --input")
    scene_doc = None
    encoded = None
    if args.scene:
        scene_doc = json.loads(Path(args.scene).read_text(encoding="utf-8"))
    else:
        encoded = dataio.read_field(args.input).channels
    req = inference.InferenceRequest(
        scene=scene_doc,
        encoded=encoded,
        direction=args.direction,
        slice_height=args.slice_height,
        inlet_speed=args.inlet,
        mc_samples=args.mc_samples,
        dropout_p=args.dropout_p,
        seed=args.seed,
    )
    res = inference.run_inference(surrogate, req, _comfort_from(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ff in inference.result_fields(res).items():
        dataio.write_field(out / f"{name}.wfld", ff)
    summary = {
        "seed": res.seed,
        "timing_ms": res.timing_ms,
        "model": res.model_info,
        "mc_samples": args.mc_samples,
        "dropout_p": args.dropout_p,
        "direction": args.direction,
        "slice_height": args.slice_height,
        "inlet_speed": args.inlet,
        "mean_factor_range": [float(res.mean.min()), float(res.mean.max())],
        "open_cell_fraction": float((~res.mask).mean()),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"wrote mean/stddev/variance/comfort/mask field files to {out} (seed {res.seed})")
    return 0


def cmd_eval(args) -> int:
    surrogate = Surrogate.from_checkpoint(args.checkpoint)
    manifest = dataio.load_manifest(args.manifest, validate=False)
    report = metrics.evaluate(surrogate, manifest, Path(args.manifest).parent,
                              split=args.split, mask_policy=args.mask_policy)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_serve(args) -> int:
    from . import service

    service.serve(args.checkpoint, host=args.host, port=args.port,
                  comfort=_comfort_from(args), ui_dir=args.ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="urbanwind", description=__doc__)
    ap.add_argument("--config", help="JSON file with default flag values")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an oracle dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--scene-dir", help="directory of scene JSON documents")
    g.add_argument("--synthetic", type=int, help="number of random scenes")
    g.add_argument("--scene-seed", type=int, default=0)
    g.add_argument("--grid", type=int, default=64)
    g.add_argument("--directions", default="all")
    g.add_argument("--slices", default="1.5")
    g.add_argument("--split-ratio", type=float, default=0.8)
    g.add_argument("--split-seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--inlet", type=float, default=5.0)
    g.add_argument("--tol", type=float, default=1e-5)
    g.add_argument("--max-iters", type=int, default=5000)
    g.add_argument("--viscosity", type=float, default=1.0)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the cGAN on a manifest")
    t.add_argument("--manifest", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--size", type=int, default=64)
    t.add_argument("--rf", type=int, default=142, choices=(70, 142, 284))
    t.add_argument("--lr", type=float, default=2e-4)
    t.add_argument("--lambda-l1", type=float, default=100.0)
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--batch", type=int, default=4)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--base-width", type=int, default=16)
    t.add_argument("--checkpoint-every", type=int, default=0)
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("infer", help="run MC-dropout inference on one input")
    i.add_argument("--checkpoint", default=None)
    i.add_argument("--scene", help="scene JSON document")
    i.add_argument("--input", help="pre-encoded input-stack field file")
    i.add_argument("--direction", default="W")
    i.add_argument("--slice-height", type=float, default=1.5)
    i.add_argument("--inlet", type=float, default=5.0)
    i.add_argument("--mc-samples", type=int, default=30)
    i.add_argument("--dropout-p", type=float, default=0.5)
    i.add_argument("--seed", type=int, default=None)
    i.add_argument("--comfort-config")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("eval", help="evaluate a checkpoint over a manifest split")
    e.add_argument("--checkpoint", default=None)
    e.add_argument("--manifest", required=True)
    e.add_argument("--split", default="test", choices=("train", "test"))
    e.add_argument("--mask-policy", default="open-cells-only", choices=metrics.MASK_POLICIES)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("serve", help="start the HTTP inference service")
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--host", default=None)
    s.add_argument("--port", type=int, default=None)
    s.add_argument("--comfort-config")
    s.add_argument("--ui-dir")
    s.set_defaults(func=cmd_serve)
    return ap


def _resolve(flag_value, env_key: str | None, config: dict, config_key: str, builtin):
    """flag > environment > config file > built-in default."""
    if flag_value is not None:
        return flag_value
    if env_key:
        env = os.environ.get(env_key)
        if env:
            return env
    if config_key in config:
        return config[config_key]
    return builtin


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        if hasattr(args, "checkpoint"):
            args.checkpoint = _resolve(args.checkpoint, "URBANWIND_CHECKPOINT",
                                       config, "checkpoint", None)
            if args.checkpoint is None:
                raise ValueError(
                    "no checkpoint given (flag, config file, or URBANWIND_CHECKPOINT)")
        if hasattr(args, "port"):
            args.port = int(_resolve(args.port, "URBANWIND_PORT", config, "port", 8151))
        if hasattr(args, "host"):
            args.host = _resolve(args.host, None, config, "host", "127.0.0.1")
        if hasattr(args, "comfort_config") and args.comfort_config is None:
            args.comfort_config = config.get("comfort_config")
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
