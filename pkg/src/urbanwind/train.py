"""Adversarial + L1 training loop for the wind-factor cGAN.

Alternates one discriminator and one generator Adam step per batch
(beta1 = 0.5).  The L1 term runs over all cells, solid interiors included,
so the generator has to learn the zero-inside-solid structure; masking is an
evaluation concern only.  Everything is driven by named RNG substreams of
the config seed, so a rerun reproduces losses and checkpoints bit-exactly.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import dataio, models, ops


class TrainingDiverged(RuntimeError):
    """Non-finite loss or activation encountered; training aborted."""


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-4
    lambda_l1: float = 100.0
    epochs: int = 200
    batch: int = 4
    seed: int = 0
    beta1: float = 0.5
    beta2: float = 0.999
    checkpoint_every: int = 0  # 0: final checkpoint only

    def __post_init__(self) -> None:
        if self.lambda_l1 < 0:
            raise ValueError("lambda_l1 must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


def loss_terms(real_field: np.ndarray, fake_field: np.ndarray,
               d_real: np.ndarray, d_fake: np.ndarray) -> tuple[float, float, float]:
    """(L_adv_G, L_adv_D, L_L1) from fields and patch logit maps.

    Sigmoid cross-entropy per patch: D drives real->1 / fake->0 (mean of the
    two terms); G drives fake->1.  L_L1 is the plain mean absolute error over
    all cells.
    """
    l_adv_g, _ = ops.bce_with_logits(d_fake, 1.0)
    l_real, _ = ops.bce_with_logits(d_real, 1.0)
    l_fake, _ = ops.bce_with_logits(d_fake, 0.0)
    l_adv_d = 0.5 * (l_real + l_fake)
    l_l1, _ = ops.l1_loss(fake_field, real_field)
    return l_adv_g, l_adv_d, l_l1


@dataclass
class EpochLog:
    epoch: int
    l1: float
    adv_g: float
    adv_d: float
    d_steps: int
    g_steps: int
    seconds: float


def _g_step_grads(gen: models.UNetGenerator, disc: models.PatchDiscriminator,
                  xb: np.ndarray, yb: np.ndarray, fake: np.ndarray, tape_g,
                  lambda_l1: float) -> tuple[dict[str, np.ndarray], float, float]:
    """Generator gradients for L_adv_G + lambda * L_L1 through a frozen D."""
    fake5 = np.concatenate([xb, fake], axis=1)
    d_fake, tape_df = disc.forward(fake5, training=True)
    l_adv_g, dlogits = ops.bce_with_logits(d_fake, 1.0)
    dx5, _ = disc.backward(dlogits, tape_df)
    dfake = dx5[:, xb.shape[1]:, :, :]
    l_l1, dl1 = ops.l1_loss(fake, yb)
    dtotal = dfake + np.asarray(lambda_l1, dtype=dl1.dtype) * dl1
    grads_g = gen.backward(dtotal, tape_g)
    return grads_g, l_adv_g, l_l1


def train(manifest: dataio.DatasetManifest, root, train_cfg: TrainConfig,
          gen_cfg: models.GeneratorConfig, disc_cfg: models.DiscriminatorConfig,
          out_dir, log_every: int = 1, progress=None):
    """Train on the manifest's train split; returns (checkpoint_path, logs).

    Writes ``checkpoint.wckp`` plus ``train_log.json`` into ``out_dir``;
    intermediate checkpoints land every ``checkpoint_every`` epochs when that
    is enabled in the config.
    """
    x, y, _, entries = dataio.load_pairs(manifest, root, split="train")
    if len(entries) == 0:
        raise ValueError("training split is empty")
    if x.shape[2] != gen_cfg.input_size:
        raise ValueError(f"dataset grid {x.shape[2]} != generator input size {gen_cfg.input_size}")
    x = models.normalize_input(x)
    y = models.encode_factors(y)[:, None, :, :]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = train_cfg.seed
    gen = models.UNetGenerator(gen_cfg, np.random.default_rng([seed, 0]))
    disc = models.PatchDiscriminator(disc_cfg, np.random.default_rng([seed, 1]))
    shuffle_rng = np.random.default_rng([seed, 2])
    dropout_rng = np.random.default_rng([seed, 3])
    adam_g = ops.adam_init(gen.params)
    adam_d = ops.adam_init(disc.params)

    n = x.shape[0]
    logs: list[EpochLog] = []
    ckpt_path = out / "checkpoint.wckp"

    def write_ckpt(epoch: int, path) -> None:
        tensors: dict[str, np.ndarray] = {}
        tensors.update({f"g.{k}": v for k, v in gen.params.items()})
        tensors.update({f"gb.{k}": v for k, v in gen.buffers.items()})
        tensors.update({f"d.{k}": v for k, v in disc.params.items()})
        tensors.update({f"db.{k}": v for k, v in disc.buffers.items()})
        meta = ckpt.build_meta(gen_cfg, disc_cfg, train_cfg, epoch, seed, tensors)
        ckpt.save_checkpoint(path, meta, tensors)

    for epoch in range(1, train_cfg.epochs + 1):
        t0 = time.time()
        order = shuffle_rng.permutation(n)
        sums = np.zeros(3, dtype=np.float64)
        weights = 0
        d_steps = g_steps = 0
        for start in range(0, n, train_cfg.batch):
            idx = order[start:start + train_cfg.batch]
            xb = x[idx]
            yb = y[idx]
            try:
                fake, tape_g = gen.forward(xb, training=True, dropout_rng=dropout_rng)

                # --- discriminator step (generator output treated as constant)
                real5 = np.concatenate([xb, yb], axis=1)
                fake5 = np.concatenate([xb, fake], axis=1)
                d_real, tape_dr = disc.forward(real5, training=True)
                d_fake, tape_df = disc.forward(fake5, training=True)
                l_real, dlr = ops.bce_with_logits(d_real, 1.0)
                l_fake, dlf = ops.bce_with_logits(d_fake, 0.0)
                l_adv_d = 0.5 * (l_real + l_fake)
                _, grads_dr = disc.backward(0.5 * dlr, tape_dr)
                _, grads_df = disc.backward(0.5 * dlf, tape_df)
                grads_d = {k: grads_dr[k] + grads_df[k] for k in grads_dr}
                ops.adam_step(disc.params, grads_d, adam_d, train_cfg.lr,
                              train_cfg.beta1, train_cfg.beta2)
                d_steps += 1

                # --- generator step against the updated discriminator
                grads_g, l_adv_g, l_l1 = _g_step_grads(
                    gen, disc, xb, yb, fake, tape_g, train_cfg.lambda_l1)
                ops.adam_step(gen.params, grads_g, adam_g, train_cfg.lr,
                              train_cfg.beta1, train_cfg.beta2)
                g_steps += 1
            except ops.NonFiniteError as exc:
                raise TrainingDiverged(
                    f"epoch {epoch}, step {d_steps}: {exc}") from exc
            if not np.isfinite(l_adv_d) or not np.isfinite(l_adv_g) or not np.isfinite(l_l1):
                raise TrainingDiverged(
                    f"epoch {epoch}, step {d_steps}: non-finite loss "
                    f"(adv_d={l_adv_d}, adv_g={l_adv_g}, l1={l_l1})")
            sums += np.array([l_l1, l_adv_g, l_adv_d]) * len(idx)
            weights += len(idx)

        log = EpochLog(
            epoch=epoch,
            l1=float(sums[0] / weights),
            adv_g=float(sums[1] / weights),
            adv_d=float(sums[2] / weights),
            d_steps=d_steps,
            g_steps=g_steps,
            seconds=time.time() - t0,
        )
        logs.append(log)
        if progress is not None and (epoch % log_every == 0 or epoch == train_cfg.epochs):
            progress(log)
        if train_cfg.checkpoint_every and epoch % train_cfg.checkpoint_every == 0 \
                and epoch != train_cfg.epochs:
            write_ckpt(epoch, out / f"checkpoint_epoch{epoch:04d}.wckp")

    write_ckpt(train_cfg.epochs, ckpt_path)
    with open(out / "train_log.json", "w", encoding="utf-8") as fh:
        json.dump([asdict(l) for l in logs], fh, indent=1, sort_keys=True)
        fh.write("\n")
    return ckpt_path, logs
