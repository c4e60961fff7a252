import numpy as np
import pytest

from urbanwind import dataio, models, oracle, scene as sc, synth, train


def numeric_grad(f, x, step=1e-4):
    """Central-difference gradient of scalar f() w.r.t. array x, in-place probes."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        old = x[i]
        x[i] = old + step
        fp = f()
        x[i] = old - step
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2.0 * step)
        it.iternext()
    return g


def rel_err(a, b):
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    return np.linalg.norm(a - b) / max(na, nb, 1e-12)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """6 scenes x 2 directions at 64x64: enough for split/train/eval plumbing."""
    root = tmp_path_factory.mktemp("tiny_ds")
    scenes = synth.random_scenes(6, seed=321)
    manifest = dataio.generate_dataset(
        scenes, root,
        directions=[sc.CardinalDirection.W, sc.CardinalDirection.N],
        solver_cfg=oracle.SolverConfig(),
        grid=64,
        workers=2,
    )
    return manifest, root


@pytest.fixture(scope="session")
def tiny_checkpoint(tiny_dataset, tmp_path_factory):
    """One-epoch checkpoint over the tiny dataset; shared by service/CLI tests."""
    manifest, root = tiny_dataset
    out = tmp_path_factory.mktemp("tiny_run")
    tc = train.TrainConfig(epochs=1, seed=11)
    gc = models.GeneratorConfig(input_size=64, base_width=8)
    dc = models.DiscriminatorConfig(receptive_field=70, width=8)
    ckpt_path, _ = train.train(manifest, root, tc, gc, dc, out)
    return ckpt_path
