"""Per-level generator and critic networks.

Each level runs a four-layer skeleton-aware temporal conv stack:
three Conv+LeakyReLU layers and a final linear Conv, with channel
widths F0 -> F0 -> 2*F0 -> 2*F0 -> F0 for the generator and
... -> 1 for the critic.  The generator is residual: it predicts the
missing high-frequency detail on top of the upsampled coarser level.
The critic scores every temporal patch and averages the patch map.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from . import tensor as tz
from .graph import support_mask
from .motion import interp_time, sample_positions
from .rng import stream

KERNEL_SIZE = 5
HOP_DISTANCE = 2
N_LAYERS = 4
LEAKY_SLOPE = 0.2


@dataclass
class LevelSpec:
    index: int  # 1-based level number
    length: int  # frames at this level
    sigma: float  # noise amplitude
    n_features: int  # F0


def generator_channel_plan(f0):
    return [(f0, f0), (f0, 2 * f0), (2 * f0, 2 * f0), (2 * f0, f0)]


def discriminator_channel_plan(f0):
    return [(f0, f0), (f0, 2 * f0), (2 * f0, 2 * f0), (2 * f0, 1)]


@dataclass
class ConvLayer:
    w: tz.Tensor  # [c_out, c_in, K]
    b: tz.Tensor  # [c_out]
    mask: np.ndarray  # bool [c_out, c_in]


class StackParams:
    """Parameters of one four-layer conv stack."""

    def __init__(self, layers, kind):
        self.layers = layers
        self.kind = kind

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend([layer.w, layer.b])
        return out

    def kernel_masks(self):
        """id(w) -> float mask broadcastable over the kernel tensor."""
        return {
            id(layer.w): layer.mask[:, :, None].astype(np.float64)
            for layer in self.layers
        }

    def named_arrays(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.append((f"layer{i}.w", layer.w.data))
            out.append((f"layer{i}.b", layer.b.data))
        return out

    def load_arrays(self, arrays):
        for i, layer in enumerate(self.layers):
            layer.w.data = arrays[f"layer{i}.w"]
            layer.b.data = arrays[f"layer{i}.b"]


def init_params(seed, graph, spec, kind):
    """Deterministically initialize one level's stack.

    Kernels are zero-mean normal with std 1/sqrt(fan_in); entries
    outside the skeletal support are zeroed.  The critic's final layer
    aggregates all channels, so its support is unrestricted.
    """
    f0 = spec.n_features
    plan = generator_channel_plan(f0) if kind == "generator" else discriminator_channel_plan(f0)
    layers = []
    for li, (c_in, c_out) in enumerate(plan):
        if kind == "discriminator" and li == len(plan) - 1:
            mask = np.ones((c_out, c_in), dtype=bool)
        else:
            mask = support_mask(graph, HOP_DISTANCE, c_in // f0, c_out // f0)
        rng = stream(seed, "init", kind, spec.index, li)
        std = 1.0 / np.sqrt(c_in * KERNEL_SIZE)
        w = rng.standard_normal((c_out, c_in, KERNEL_SIZE)) * std
        w *= mask[:, :, None]
        layers.append(
            ConvLayer(tz.parameter(w), tz.parameter(np.zeros(c_out)), mask)
        )
    return StackParams(layers, kind)


def conv_stack(params, x):
    """Run the stack on a [C, T] tensor; LeakyReLU after all but the last conv."""
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        x = tz.temporal_conv(x, layer.w, layer.b, layer.mask)
        if i != last:
            x = tz.leaky_relu(x, LEAKY_SLOPE)
    return x


def upsample_channels(data, t_out, p=None, q=None):
    """Resample a [C, T] array/tensor-free signal along time.

    Positions are u * p / q; by default endpoint-aligned
    (p = T-1, q = t_out-1).  Positions beyond the last frame clamp to it.
    """
    t_in = data.shape[1]
    if p is None:
        p, q = t_in - 1, t_out - 1
    pos = sample_positions(t_out, p, q)
    return interp_time(data.T, pos).T


def generator_apply(params, up_prev, z):
    """Residual level evaluation on channels-first tensors.

    ``up_prev`` is the already-upsampled previous level ([C, T] array or
    tensor) or None at the first level; ``z`` is the broadcast noise.
    """
    if up_prev is None:
        return conv_stack(params, z)
    if not isinstance(up_prev, tz.Tensor):
        up_prev = tz.constant(up_prev)
    x = tz.add(up_prev, z)
    return tz.add(conv_stack(params, x), up_prev)


def generator_level(params, prev, z):
    """Spec-shaped level op: resamples ``prev`` to the noise length.

    ``prev`` is the coarser level output as a [C, T_{i-1}] array (None
    at the first level), ``z`` a [C, T_i] array.  Returns a [C, T_i]
    array.
    """
    zt = tz.constant(z)
    if prev is None:
        return generator_apply(params, None, zt).data
    t_out = z.shape[1]
    if t_out != zt.data.shape[1]:
        raise ValueError("noise length mismatch")
    up = upsample_channels(np.asarray(prev), t_out)
    return generator_apply(params, up, zt).data


def patch_score_map(params, x):
    """The critic's per-patch confidence map [1, T]."""
    if not isinstance(x, tz.Tensor):
        x = tz.constant(x)
    rf = conv_stack_receptive_field()
    if x.data.shape[1] < rf:
        raise ValueError(
            f"sequence of {x.data.shape[1]} frames is shorter than the "
            f"receptive field ({rf})"
        )
    return conv_stack(params, x)


def discriminator_level(params, x):
    """Scalar critic score: temporal mean of the patch map."""
    return tz.mean(patch_score_map(params, x))


def broadcast_noise(track, n_channels, sigma):
    """Per-frame scalar noise shared across channels, scaled by sigma."""
    track = np.asarray(track, dtype=np.float64)
    return np.repeat(track[None, :] * sigma, n_channels, axis=0)


# ---------------------------------------------------------------------------
# receptive field


def conv_stack_receptive_field(n_layers=N_LAYERS, kernel=KERNEL_SIZE):
    """Frames seen by one output of a stride-1 conv stack."""
    return 1 + n_layers * (kernel - 1)


def _level_influences(lengths):
    """Per-level onward influence widths (finest frames), exact fractions.

    ``influence[k]`` bounds how far one frame of level k's *output*
    reaches into the finest output through upsampling and the conv
    stacks above it.
    """
    s = len(lengths)
    half = Fraction(conv_stack_receptive_field() - 1, 2)
    finest = lengths[-1] - 1
    influence = [Fraction(0)] * s
    for k in range(s - 1, 0, -1):
        rho = Fraction(lengths[k - 1] - 1, lengths[k] - 1)
        kappa = Fraction(finest, lengths[k] - 1)
        influence[k - 1] = (1 / rho + half) * kappa + influence[k]
    return half, influence


def stack_receptive_field(lengths):
    """(R, r) of the full multi-level stack, in finest-rate frames.

    Propagates the per-level 17-frame field through the linear
    resampling chain defined by the level lengths (coarsest first),
    using exact rational arithmetic and rounding up, so the analytic
    field always covers the empirical one.  r = ceil(R / 2) is the
    number of trailing frames a streaming client must withhold.
    """
    s = len(lengths)
    half, influence = _level_influences(lengths)
    finest = lengths[-1] - 1
    r_half = Fraction(0)
    for k in range(s):
        kappa = Fraction(finest, lengths[k] - 1)
        spread = Fraction(0 if k == s - 1 else 1)  # for downsampled inputs
        r_half = max(r_half, half * kappa + influence[k] + spread)
    radius = ceil(r_half)
    return 2 * radius + 1, radius + 1


def level_input_influence(lengths, k):
    """Half-width (finest frames) of one level-k input frame's influence."""
    half, influence = _level_influences(lengths)
    kappa = Fraction(lengths[-1] - 1, lengths[k] - 1)
    return ceil(half * kappa + influence[k])
