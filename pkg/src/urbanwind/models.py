"""U-Net generator and PatchGAN discriminator built on the ops layer.

Both models keep their parameters in flat ``dict[str, np.ndarray]`` maps and
record a flat tape of (op, name, cache) entries during forward so backward is
an explicit reversed walk; skip connections are resolved through branch
markers on the tape.

Normalization constants (stored in every checkpoint):

* inputs: all four geometry channels divide by ``HEIGHT_REF`` = 320 m;
* targets: wind factors clamp to [0, FACTOR_MAX] and map affinely onto the
  generator's tanh range [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ops

HEIGHT_REF = 320.0
FACTOR_MAX = 2.5

VALID_INPUT_SIZES = (64, 128, 256, 512)
#: Discriminator stacks by nominal receptive field.  Kernel is always 4; the
#: 284 class is the closest 4-kernel stack (it evaluates to 286).
PATCH_STACKS = {70: 3, 142: 4, 284: 5}


def normalize_input(channels: np.ndarray) -> np.ndarray:
    return (channels / HEIGHT_REF).astype(np.float32)


def encode_factors(factors: np.ndarray) -> np.ndarray:
    f = np.clip(factors, 0.0, FACTOR_MAX)
    return (f * (2.0 / FACTOR_MAX) - 1.0).astype(np.float32)


def decode_factors(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, -1.0, 1.0)
    return ((t + 1.0) * (FACTOR_MAX / 2.0)).astype(np.float32)


@dataclass(frozen=True)
class GeneratorConfig:
    input_size: int = 64
    in_channels: int = 4
    out_channels: int = 1
    base_width: int = 16
    width_cap_mult: int = 8
    dropout_p: float = 0.5

    def __post_init__(self) -> None:
        if self.input_size not in VALID_INPUT_SIZES:
            raise ValueError(f"input_size must be one of {VALID_INPUT_SIZES}")
        if self.base_width < 1 or self.width_cap_mult < 1:
            raise ValueError("base_width and width_cap_mult must be >= 1")
        if not 0 <= self.dropout_p < 1:
            raise ValueError("dropout_p must be in [0, 1)")

    @property
    def depth(self) -> int:
        """Down/up block count; one halving per block makes the bottleneck 1x1."""
        return int(math.log2(self.input_size))

    @property
    def widths(self) -> tuple[int, ...]:
        cap = self.base_width * self.width_cap_mult
        return tuple(min(self.base_width * 2**i, cap) for i in range(self.depth))


@dataclass(frozen=True)
class DiscriminatorConfig:
    receptive_field: int = 142
    in_channels: int = 5
    width: int = 16

    def __post_init__(self) -> None:
        if self.receptive_field not in PATCH_STACKS:
            raise ValueError(f"receptive_field must be one of {sorted(PATCH_STACKS)}")
        if self.width < 1:
            raise ValueError("width must be >= 1")

    def stack(self) -> list[tuple[int, int]]:
        """(kernel, stride) per conv layer: n stride-2 layers then two stride-1."""
        n = PATCH_STACKS[self.receptive_field]
        return [(4, 2)] * n + [(4, 1), (4, 1)]

    def channel_plan(self) -> list[int]:
        n = PATCH_STACKS[self.receptive_field]
        chans = [min(self.width * 2**i, self.width * 8) for i in range(n)]
        chans.append(min(self.width * 2**n, self.width * 8))  # stride-1 feature layer
        chans.append(1)  # logit head
        return chans


def compute_receptive_field(stack: list[tuple[int, int]]) -> int:
    """RF of a conv stack via the stride-product recurrence."""
    rf = 1
    jump = 1
    for k, s in stack:
        rf += (k - 1) * jump
        jump *= s
    return rf


def output_map_size(input_size: int, stack: list[tuple[int, int]]) -> int:
    """Spatial size of the logit map: stride-2 convs use padding 1, stride-1
    convs use 'same' (asymmetric 1/2) padding."""
    size = input_size
    for k, s in stack:
        if s == 1:
            continue  # same padding keeps the size
        size = (size + 2 - k) // s + 1
    return size


def patch_input_extent(stack: list[tuple[int, int]], out_index: int) -> tuple[int, int]:
    """Half-open input index range seen by one output position along an axis."""
    a = b = out_index
    for k, s in reversed(stack):
        pad_left = 1
        a = a * s - pad_left
        b = b * s - pad_left + k - 1
    return a, b + 1


def _init_conv(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.normal(0.0, 0.02, size=shape).astype(np.float32)


class _Tape:
    """Forward records; backward accumulates parameter grads by name."""

    def __init__(self) -> None:
        self.entries: list[tuple[str, object, object]] = []

    def add(self, kind: str, name, cache) -> None:
        self.entries.append((kind, name, cache))


def _backward_tape(tape: _Tape, dy: np.ndarray, grads: dict[str, np.ndarray]) -> np.ndarray:
    skip_grads: dict[int, np.ndarray] = {}
    d = dy
    for kind, name, cache in reversed(tape.entries):
        if kind == "conv":
            d, dw, db = ops.conv2d_backward(d, cache)
            grads[f"{name}.w"] = dw
            grads[f"{name}.b"] = db
        elif kind == "tconv":
            d, dw, db = ops.conv_transpose2d_backward(d, cache)
            grads[f"{name}.w"] = dw
            grads[f"{name}.b"] = db
        elif kind == "bn":
            d, dg, dbt = ops.batchnorm_backward(d, cache)
            grads[f"{name}.gamma"] = dg
            grads[f"{name}.beta"] = dbt
        elif kind == "relu":
            d = ops.relu_backward(d, cache)
        elif kind == "lrelu":
            d = ops.leaky_relu_backward(d, cache)
        elif kind == "tanh":
            d = ops.tanh_backward(d, cache)
        elif kind == "dropout":
            d = ops.dropout_backward(d, cache)
        elif kind == "concat":
            d, dskip = ops.concat_backward(d, cache)
            skip_grads[name] = dskip
        elif kind == "skip_out":
            d = d + skip_grads.pop(name)
        else:  # pragma: no cover
            raise AssertionError(f"unknown tape entry {kind}")
    assert not skip_grads, "unconsumed skip gradients"
    return d


class UNetGenerator:
    """pix2pix-style U-Net: one skip block per halving down to a 1x1 bottleneck."""

    def __init__(self, cfg: GeneratorConfig, rng: np.random.Generator):
        self.cfg = cfg
        w = cfg.widths
        depth = cfg.depth
        params: dict[str, np.ndarray] = {}
        buffers: dict[str, np.ndarray] = {}

        def add_bn(name: str, c: int) -> None:
            params[f"{name}.gamma"] = rng.normal(1.0, 0.02, size=c).astype(np.float32)
            params[f"{name}.beta"] = np.zeros(c, dtype=np.float32)
            buffers[f"{name}.rmean"] = np.zeros(c, dtype=np.float32)
            buffers[f"{name}.rvar"] = np.ones(c, dtype=np.float32)

        params["enc0.w"] = _init_conv(rng, (w[0], cfg.in_channels, 4, 4))
        params["enc0.b"] = np.zeros(w[0], dtype=np.float32)
        for i in range(1, depth):
            params[f"enc{i}.w"] = _init_conv(rng, (w[i], w[i - 1], 4, 4))
            params[f"enc{i}.b"] = np.zeros(w[i], dtype=np.float32)
            if i <= depth - 2:
                add_bn(f"enc{i}.bn", w[i])
        for d in range(depth - 1, 0, -1):
            cin = w[d] if d == depth - 1 else 2 * w[d]
            params[f"dec{d}.w"] = _init_conv(rng, (cin, w[d - 1], 4, 4))
            params[f"dec{d}.b"] = np.zeros(w[d - 1], dtype=np.float32)
            add_bn(f"dec{d}.bn", w[d - 1])
        params["dec0.w"] = _init_conv(rng, (2 * w[0], cfg.out_channels, 4, 4))
        params["dec0.b"] = np.zeros(cfg.out_channels, dtype=np.float32)

        self.params = params
        self.buffers = buffers

    @property
    def dropout_blocks(self) -> tuple[int, ...]:
        d = self.cfg.depth
        return (d - 1, d - 2, d - 3)

    def forward(self, x: np.ndarray, training: bool = False,
                dropout_rng: np.random.Generator | None = None,
                dropout_p: float | None = None):
        """Map a normalized (N, 4, S, S) stack to tanh-range (N, 1, S, S).

        ``training`` switches batch norm to batch statistics (and updates the
        running buffers); dropout fires only when ``dropout_rng`` is given,
        with probability ``dropout_p`` (defaults to the config value).
        """
        cfg = self.cfg
        if x.ndim != 4 or x.shape[1] != cfg.in_channels or x.shape[2] != x.shape[3] \
                or x.shape[2] != cfg.input_size:
            raise ValueError(
                f"generator expects (N, {cfg.in_channels}, {cfg.input_size}, "
                f"{cfg.input_size}), got {x.shape}"
            )
        p = cfg.dropout_p if dropout_p is None else dropout_p
        depth = cfg.depth
        P = self.params
        B = self.buffers
        tape = _Tape()

        def conv(name, h, stride=2, padding=1):
            out, cache = ops.conv2d_forward(h, P[f"{name}.w"], P[f"{name}.b"], stride, padding,
                                            layout="nhwc")
            tape.add("conv", name, cache)
            return out

        def tconv(name, h):
            out, cache = ops.conv_transpose2d_forward(h, P[f"{name}.w"], P[f"{name}.b"], 2, 1,
                                                      layout="nhwc")
            tape.add("tconv", name, cache)
            return out

        def bn(name, h):
            out, cache = ops.batchnorm_forward(
                h, P[f"{name}.gamma"], P[f"{name}.beta"],
                B[f"{name}.rmean"], B[f"{name}.rvar"], training=training, channel_axis=-1,
            )
            tape.add("bn", name, cache)
            return out

        skips: dict[int, np.ndarray] = {}
        h = np.ascontiguousarray(x.transpose(0, 2, 3, 1))  # channels-last internally
        h = conv("enc0", h)
        skips[0] = h
        tape.add("skip_out", 0, None)
        for i in range(1, depth):
            h, cache = ops.leaky_relu_forward(h)
            tape.add("lrelu", None, cache)
            h = conv(f"enc{i}", h)
            if i <= depth - 2:
                h = bn(f"enc{i}.bn", h)
                skips[i] = h
                tape.add("skip_out", i, None)

        for d in range(depth - 1, 0, -1):
            h, cache = ops.relu_forward(h)
            tape.add("relu", None, cache)
            h = tconv(f"dec{d}", h)
            h = bn(f"dec{d}.bn", h)
            if d in self.dropout_blocks and dropout_rng is not None and p > 0:
                h, cache = ops.dropout_forward(h, p, dropout_rng, active=True)
                tape.add("dropout", None, cache)
            h, cache = ops.concat_forward([h, skips[d - 1]], axis=3)
            tape.add("concat", d - 1, cache)

        h, cache = ops.relu_forward(h)
        tape.add("relu", None, cache)
        h = tconv("dec0", h)
        h, cache = ops.tanh_forward(h)
        tape.add("tanh", None, cache)
        return np.ascontiguousarray(h.transpose(0, 3, 1, 2)), tape

    def backward(self, dy: np.ndarray, tape: _Tape) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        _backward_tape(tape, np.ascontiguousarray(dy.transpose(0, 2, 3, 1)), grads)
        return grads


class PatchDiscriminator:
    """Conditional PatchGAN over the 4 input channels + 1 candidate channel."""

    def __init__(self, cfg: DiscriminatorConfig, rng: np.random.Generator):
        self.cfg = cfg
        chans = cfg.channel_plan()
        strides = [s for _, s in cfg.stack()]
        params: dict[str, np.ndarray] = {}
        buffers: dict[str, np.ndarray] = {}
        cin = cfg.in_channels
        for li, (cout, stride) in enumerate(zip(chans, strides)):
            params[f"d{li}.w"] = _init_conv(rng, (cout, cin, 4, 4))
            params[f"d{li}.b"] = np.zeros(cout, dtype=np.float32)
            if 0 < li < len(chans) - 1:
                params[f"d{li}.bn.gamma"] = rng.normal(1.0, 0.02, size=cout).astype(np.float32)
                params[f"d{li}.bn.beta"] = np.zeros(cout, dtype=np.float32)
                buffers[f"d{li}.bn.rmean"] = np.zeros(cout, dtype=np.float32)
                buffers[f"d{li}.bn.rvar"] = np.ones(cout, dtype=np.float32)
            cin = cout
        self.params = params
        self.buffers = buffers
        self._layers = list(zip(chans, strides))

    def forward(self, x: np.ndarray, training: bool = False):
        """(N, 5, S, S) -> per-patch real/fake logit map."""
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ValueError(f"discriminator expects {self.cfg.in_channels} channels, got {x.shape}")
        P = self.params
        B = self.buffers
        tape = _Tape()
        h = np.ascontiguousarray(x.transpose(0, 2, 3, 1))  # channels-last internally
        last = len(self._layers) - 1
        for li, (cout, stride) in enumerate(self._layers):
            padding: ops.PadSpec = 1 if stride == 2 else ((1, 2), (1, 2))
            h, cache = ops.conv2d_forward(h, P[f"d{li}.w"], P[f"d{li}.b"], stride, padding,
                                          layout="nhwc")
            tape.add("conv", f"d{li}", cache)
            if 0 < li < last:
                h, cache = ops.batchnorm_forward(
                    h, P[f"d{li}.bn.gamma"], P[f"d{li}.bn.beta"],
                    B[f"d{li}.bn.rmean"], B[f"d{li}.bn.rvar"], training=training, channel_axis=-1,
                )
                tape.add("bn", f"d{li}.bn", cache)
            if li < last:
                h, cache = ops.leaky_relu_forward(h)
                tape.add("lrelu", None, cache)
        return np.ascontiguousarray(h.transpose(0, 3, 1, 2)), tape

    def backward(self, dy: np.ndarray, tape: _Tape) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        grads: dict[str, np.ndarray] = {}
        dx = _backward_tape(tape, np.ascontiguousarray(dy.transpose(0, 2, 3, 1)), grads)
        return np.ascontiguousarray(dx.transpose(0, 3, 1, 2)), grads
