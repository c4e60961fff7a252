#!/usr/bin/env python3
"""Desk-scale end-to-end experiment.

Synthesizes an urban corpus, runs the 2D flow oracle over all eight wind
directions, trains the cGAN on the disjoint-by-scene split, and writes an
evaluation report with per-complexity-class statistics plus the
constant-field baseline.  The acceptance suite reuses these artifacts when
they exist (same seeds and sizes), so running this script ahead of pytest
avoids retraining inside the test run.

Stages can run separately:

    python scripts/run_desk_scale_experiment.py --stage gen
    python scripts/run_desk_scale_experiment.py --stage train
    python scripts/run_desk_scale_experiment.py --stage eval
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from urbanwind import dataio, metrics, models, oracle, synth, train  # noqa: E402
from urbanwind.checkpoint import Surrogate  # noqa: E402


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=".acceptance", help="artifact directory")
    ap.add_argument("--scenes", type=int, default=200)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--slice-height", type=float, default=1.5)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scene-seed", type=int, default=20260401)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--base-width", type=int, default=16)
    ap.add_argument("--rf", type=int, default=142, choices=(70, 142, 284))
    ap.add_argument("--stage", default="all", choices=("all", "gen", "train", "eval"))
    return ap.parse_args(argv)


def stage_gen(args, out: Path) -> None:
    t0 = time.time()
    scenes = synth.random_scenes(args.scenes, seed=args.scene_seed)
    print(f"[gen] {len(scenes)} scenes, solving {len(scenes) * 8} slices "
          f"at {args.grid}x{args.grid} with {args.workers} workers", flush=True)
    manifest = dataio.generate_dataset(
        scenes,
        out / "dataset",
        slice_heights=(args.slice_height,),
        solver_cfg=oracle.SolverConfig(),
        grid=args.grid,
        split_seed=args.seed,
        workers=args.workers,
    )
    conv = sum(e.converged for e in manifest.entries)
    print(f"[gen] done in {(time.time() - t0) / 60:.1f} min: "
          f"{len(manifest.entries)} entries ({conv} converged), "
          f"{len(manifest.failures)} failures", flush=True)


def stage_train(args, out: Path) -> None:
    manifest = dataio.load_manifest(out / "dataset" / "manifest.json", validate=False)
    tc = train.TrainConfig(epochs=args.epochs, seed=args.seed, checkpoint_every=50)
    gc = models.GeneratorConfig(input_size=args.grid, base_width=args.base_width)
    dc = models.DiscriminatorConfig(receptive_field=args.rf, width=args.base_width)

    def progress(log):
        print(f"[train] epoch {log.epoch}/{tc.epochs}: l1={log.l1:.4f} "
              f"advG={log.adv_g:.3f} advD={log.adv_d:.3f} ({log.seconds:.1f}s)", flush=True)

    t0 = time.time()
    ckpt_path, logs = train.train(manifest, out / "dataset", tc, gc, dc, out / "run",
                                  progress=progress)
    print(f"[train] finished {len(logs)} epochs in {(time.time() - t0) / 3600:.2f} h "
          f"-> {ckpt_path}", flush=True)


def stage_eval(args, out: Path) -> None:
    manifest = dataio.load_manifest(out / "dataset" / "manifest.json", validate=False)
    surrogate = Surrogate.from_checkpoint(str(out / "run" / "checkpoint.wckp"))
    report = metrics.evaluate(surrogate, manifest, out / "dataset", split="test")
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"[eval] masked test MAE {report.mae_mean:.4f} +- {report.mae_std:.4f}, "
          f"P90 {report.p90:.4f}; baseline {report.extras['constant_baseline_mae']:.4f}")
    for cls, row in report.per_class.items():
        print(f"[eval]   {cls}: mae {row['mae_mean']:.4f} p90 {row['p90']:.4f} "
              f"({row['n_samples']} samples)")


def main(argv=None) -> None:
    args = parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(vars(args), indent=1, sort_keys=True) + "\n")
    if args.stage in ("all", "gen"):
        stage_gen(args, out)
    if args.stage in ("all", "train"):
        stage_train(args, out)
    if args.stage in ("all", "eval"):
        stage_eval(args, out)


if __name__ == "__main__":
    main()
