"""Small convolutional networks built from the explicit layers.

Two head variants share the same downsampling backbone of blocks C1..Cn
(one stride-2 convolution + ReLU per block, halving the spatial size):

* ``classifier``: global average pooling into a fully connected layer with
  one logit per class.
* ``detector``: a two-level feature pyramid on the last two blocks with
  shared classification (per-anchor sigmoid) and regression (4 values per
  anchor) subnets.  Outputs are flattened level-major, then row-major over
  cells, then anchor-within-cell, matching the anchor grid layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from ..geometry import AnchorConfig
from .layers import Conv2D, Dense, GlobalAvgPool, Param, ReLU, UpsampleNearest2x, sigmoid

__all__ = ["NetConfig", "ToyNet"]


@dataclass(frozen=True)
class NetConfig:
    in_channels: int = 1
    block_channels: tuple[int, ...] = (8, 16, 32, 48, 64)
    head: str = "classifier"
    num_classes: int = 2
    ratios: tuple[float, ...] = (1.0, 0.5, 2.0, 4.0)
    scales: tuple[float, ...] = (1.0, 2 ** 0.5, 2.0)
    base_sizes: tuple[float, float] | None = None
    pyramid_channels: int = 32
    head_channels: int = 32
    prior_prob: float = 0.01

    def __post_init__(self):
        if self.head not in ("classifier", "detector"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == "detector" and len(self.block_channels) < 2:
            raise ValueError("detector needs at least two backbone blocks")

    @property
    def num_blocks(self) -> int:
        return len(self.block_channels)

    @property
    def anchors_per_location(self) -> int:
        return len(self.ratios) * len(self.scales)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        d = dict(d)
        for key in ("block_channels", "ratios", "scales"):
            d[key] = tuple(d[key])
        if d.get("base_sizes") is not None:
            d["base_sizes"] = tuple(d["base_sizes"])
        return cls(**d)


class ToyNet:
    """Backbone + head network with explicit backprop and a freeze contract."""

    def __init__(self, config: NetConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        self.blocks = []
        in_ch = config.in_channels
        for i, out_ch in enumerate(config.block_channels):
            conv = Conv2D(in_ch, out_ch, ksize=3, stride=2, rng=rng, name=f"C{i + 1}.conv")
            self.blocks.append((conv, ReLU()))
            in_ch = out_ch

        if config.head == "classifier":
            self.pool = GlobalAvgPool()
            self.fc = Dense(config.block_channels[-1], config.num_classes, rng=rng, name="head.fc")
        else:
            pc = config.pyramid_channels
            hc = config.head_channels
            a = config.anchors_per_location
            self.lat_fine = Conv2D(config.block_channels[-2], pc, ksize=1, rng=rng, name="fpn.lat_fine")
            self.lat_coarse = Conv2D(config.block_channels[-1], pc, ksize=1, rng=rng, name="fpn.lat_coarse")
            self.upsample = UpsampleNearest2x()
            self.smooth_fine = Conv2D(pc, pc, ksize=3, rng=rng, name="fpn.smooth_fine")
            self.smooth_coarse = Conv2D(pc, pc, ksize=3, rng=rng, name="fpn.smooth_coarse")
            self.cls_hidden = Conv2D(pc, hc, ksize=3, rng=rng, name="head.cls_hidden")
            self.cls_relu = ReLU()
            self.cls_out = Conv2D(hc, a, ksize=3, rng=rng, name="head.cls_out")
            self.reg_hidden = Conv2D(pc, hc, ksize=3, rng=rng, name="head.reg_hidden")
            self.reg_relu = ReLU()
            self.reg_out = Conv2D(hc, 4 * a, ksize=3, rng=rng, name="head.reg_out")
            # near-zero output kernels let the bias set the initial foreground
            # probability to ~prior_prob; otherwise the focal loss explodes on
            # the first steps and saturates the sigmoids
            self.cls_out.w.value[...] = rng.normal(0.0, 0.01, self.cls_out.w.value.shape)
            self.cls_out.b.value[:] = math.log(config.prior_prob / (1 - config.prior_prob))
            self.reg_out.w.value[...] = rng.normal(0.0, 0.01, self.reg_out.w.value.shape)

        self._block_outs: list[np.ndarray] | None = None
        self._cache: dict = {}
        self.last_block_grad: np.ndarray | None = None

    # -- parameters ----------------------------------------------------------

    def parameters(self) -> list[Param]:
        out = []
        for conv, _ in self.blocks:
            out.extend(conv.params())
        for layer in self._head_layers():
            out.extend(layer.params())
        return out

    def kernel_params(self) -> list[Param]:
        return [p for p in self.parameters() if not p.is_bias]

    def _head_layers(self):
        if self.config.head == "classifier":
            return [self.pool, self.fc]
        return [
            self.lat_fine, self.lat_coarse, self.smooth_fine, self.smooth_coarse,
            self.cls_hidden, self.cls_out, self.reg_hidden, self.reg_out,
        ]

    def zero_grads(self):
        for p in self.parameters():
            p.grad[...] = 0.0

    def set_trainable(self, components=None):
        """Restrict training to the given components.

        ``components`` is an iterable of block labels ("C1".."Cn") and/or
        "head"; None makes every parameter trainable again.
        """
        if components is None:
            for p in self.parameters():
                p.trainable = True
            return
        wanted = set(components)
        known = {f"C{i + 1}" for i in range(len(self.blocks))} | {"head"}
        unknown = wanted - known
        if unknown:
            raise ValueError(f"unknown components {sorted(unknown)}")
        for i, (conv, _) in enumerate(self.blocks):
            flag = f"C{i + 1}" in wanted
            for p in conv.params():
                p.trainable = flag
        head_flag = "head" in wanted
        for layer in self._head_layers():
            for p in layer.params():
                p.trainable = head_flag

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"missing parameter {p.name}")
            if state[p.name].shape != p.value.shape:
                raise ValueError(f"shape mismatch for {p.name}")
            p.value[...] = state[p.name]

    # -- anchor layout (detector) ---------------------------------------------

    def anchor_config(self) -> AnchorConfig:
        if self.config.head != "detector":
            raise ValueError("anchor layout is only defined for detector nets")
        b = self.config.num_blocks
        stride_fine, stride_coarse = 2 ** (b - 1), 2 ** b
        if self.config.base_sizes is not None:
            base_fine, base_coarse = self.config.base_sizes
        else:
            base_fine, base_coarse = 4.0 * stride_fine, 4.0 * stride_coarse
        return AnchorConfig(
            ratios=self.config.ratios,
            scales=self.config.scales,
            levels=((stride_fine, base_fine), (stride_coarse, base_coarse)),
        )

    # -- forward / backward ----------------------------------------------------

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None, None]
        elif x.ndim == 3:
            x = x[:, None]
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected (n, {self.config.in_channels}, h, w) input, got {x.shape}")
        div = 2 ** self.config.num_blocks
        if x.shape[2] % div or x.shape[3] % div:
            raise ValueError(f"input dims must be divisible by {div}, got {x.shape[2:]} ")
        return x

    def _all_layers(self):
        for conv, relu in self.blocks:
            yield conv
            yield relu
        yield from self._head_layers()
        if self.config.head == "detector":
            yield self.cls_relu
            yield self.reg_relu
            yield self.upsample

    def forward(self, x):
        """Run the network; returns logits for a classifier or
        (per-anchor probabilities, per-anchor offsets) for a detector."""
        x = self._check_input(x)
        for layer in self._all_layers():
            layer.reset()
        self._block_outs = []
        h = x
        for conv, relu in self.blocks:
            h = relu.forward(conv.forward(h))
            self._block_outs.append(h)

        if self.config.head == "classifier":
            logits = self.fc.forward(self.pool.forward(self._block_outs[-1]))
            self._cache = {"n": x.shape[0]}
            return logits

        lat_f = self.lat_fine.forward(self._block_outs[-2])
        lat_c = self.lat_coarse.forward(self._block_outs[-1])
        p_fine = self.smooth_fine.forward(lat_f + self.upsample.forward(lat_c))
        p_coarse = self.smooth_coarse.forward(lat_c)

        a = self.config.anchors_per_location
        n = x.shape[0]
        probs_parts, reg_parts, shapes = [], [], []
        for p_level in (p_fine, p_coarse):
            cls_map = self.cls_out.forward(self.cls_relu.forward(self.cls_hidden.forward(p_level)))
            reg_map = self.reg_out.forward(self.reg_relu.forward(self.reg_hidden.forward(p_level)))
            _, _, hl, wl = cls_map.shape
            shapes.append((hl, wl))
            probs_parts.append(sigmoid(cls_map).transpose(0, 2, 3, 1).reshape(n, hl * wl * a))
            reg_parts.append(
                reg_map.reshape(n, a, 4, hl, wl).transpose(0, 3, 4, 1, 2).reshape(n, hl * wl * a, 4)
            )
        probs = np.concatenate(probs_parts, axis=1)
        regs = np.concatenate(reg_parts, axis=1)
        self._cache = {"probs_parts": probs_parts, "shapes": shapes, "n": n}
        return probs, regs

    def backward(self, *grads):
        """Backpropagate head gradients into all trainable parameters.

        Classifier: ``backward(dlogits)``.  Detector:
        ``backward(dprobs, dregs)`` with shapes matching the forward outputs.
        Returns the gradient with respect to the input batch; the gradient of
        the last backbone block's activations is kept in ``last_block_grad``.
        """
        if self._block_outs is None:
            raise RuntimeError("backward called before forward")
        if self.config.head == "classifier":
            (dlogits,) = grads
            g = self.pool.backward(self.fc.backward(dlogits))
        else:
            dprobs, dregs = grads
            a = self.config.anchors_per_location
            n = self._cache["n"]
            d_levels = []
            offset = 0
            for (hl, wl), p_flat in zip(self._cache["shapes"], self._cache["probs_parts"]):
                count = hl * wl * a
                dp = dprobs[:, offset : offset + count]
                dz = dp * p_flat * (1.0 - p_flat)  # through the sigmoid
                dcls_map = dz.reshape(n, hl, wl, a).transpose(0, 3, 1, 2)
                dreg_map = (
                    dregs[:, offset : offset + count]
                    .reshape(n, hl, wl, a, 4)
                    .transpose(0, 3, 4, 1, 2)
                    .reshape(n, 4 * a, hl, wl)
                )
                d_levels.append((dcls_map, dreg_map))
                offset += count

            # heads share weights across levels; caches pop in LIFO order
            dp_levels = []
            for dcls_map, dreg_map in reversed(d_levels):
                dp_level = self.cls_hidden.backward(
                    self.cls_relu.backward(self.cls_out.backward(dcls_map))
                )
                dp_level += self.reg_hidden.backward(
                    self.reg_relu.backward(self.reg_out.backward(dreg_map))
                )
                dp_levels.append(dp_level)
            dp_coarse, dp_fine = dp_levels

            dpre_fine = self.smooth_fine.backward(dp_fine)
            dpre_coarse = self.smooth_coarse.backward(dp_coarse)
            dlat_c = dpre_coarse + self.upsample.backward(dpre_fine)
            d_fine_block = self.lat_fine.backward(dpre_fine)
            d_coarse_block = self.lat_coarse.backward(dlat_c)
            g = d_coarse_block
            extra = {len(self.blocks) - 2: d_fine_block}

        last = len(self.blocks) - 1
        for i in range(last, -1, -1):
            if self.config.head == "detector" and i in extra:
                g = g + extra[i]
            if i == last:
                self.last_block_grad = g.copy()
            conv, relu = self.blocks[i]
            g = conv.backward(relu.backward(g))
        return g
