"""Inference-side composition of trained levels.

Generation at arbitrary length keeps the training pyramid's exact
resampling ratios: positions between levels are u * (T_tr[i-1]-1) /
(T_tr[i]-1), anchored at frame 0.  Because the maps do not depend on
the output length, a generated stream is prefix-stable -- extending the
constraints of a conditional generation never changes frames that are
more than the halved receptive field away from the end.  That property
is what interactive sessions rely on.

Level lengths are grown coarse-to-fine with the minimal chain that
feeds every interpolation position (at the training length this
reproduces the training lengths exactly).
"""

from __future__ import annotations

from math import ceil
from fractions import Fraction

import numpy as np

from .motion import (
    Motion,
    interp_time,
    resample,
    rotation_channel_slice,
    displacement_slice,
    sample_positions,
)
from .networks import broadcast_noise
from .rng import normal_track


def conv_forward(params, x):
    """Pure-array forward pass of one conv stack ([C, T] in, [C', T] out).

    Mirrors the graph ops of :mod:`monomotion.tensor` operation for
    operation, so values are bit-identical to the recorded path.
    """
    from .tensor import _mirror_index, _mm, _unfold_index
    from .networks import LEAKY_SLOPE

    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        w = layer.w.data * layer.mask[:, :, None]
        c_out, c_in, k = w.shape
        t = x.shape[1]
        pad = (k - 1) // 2
        xp = np.take(x, _mirror_index(t, pad), axis=1) if pad else x
        cols = np.take(xp, _unfold_index(t, k), axis=1).reshape(c_in * k, t)
        x = _mm(w.reshape(c_out, c_in * k), cols) + layer.b.data[:, None]
        if i != last:
            x = np.where(x > 0.0, x, x * LEAKY_SLOPE)
    return x


def generation_level_lengths(checkpoint, out_length):
    """Frame count per level for an ``out_length``-frame generation.

    Built fine-to-coarse so that every anchored interpolation position
    has both neighbors available; reproduces the training lengths when
    ``out_length`` equals the training length.
    """
    train = checkpoint.level_lengths[0]
    s = len(train)
    lengths = [0] * s
    lengths[-1] = int(out_length)
    for i in range(s - 1, 0, -1):
        rho = Fraction(train[i - 1] - 1, train[i] - 1)
        lengths[i - 1] = ceil(rho * (lengths[i] - 1)) + 1
    if lengths[0] < 3:
        raise ValueError(f"output length {out_length} is too short to synthesize")
    return lengths


def constrained_channel_mask(skeleton, joint_names):
    """Boolean [F0] mask of the channels a constraint set controls.

    The name ``root`` selects the root joint's rotation plus the global
    displacement; any other joint name selects that joint's rotation
    channels.
    """
    mask = np.zeros(skeleton.n_features, dtype=bool)
    for name in joint_names:
        if name == "root":
            mask[rotation_channel_slice(0)] = True
            mask[displacement_slice(skeleton.n_joints)] = True
        elif name in skeleton.names:
            mask[rotation_channel_slice(skeleton.names.index(name))] = True
        else:
            raise ValueError(f"unknown constrained joint {name!r}")
    return mask


def _downsample_constraints(constraints_cf, t_level, p, q):
    """Sample finest-rate constraint channels at anchored level positions."""
    pos = np.minimum(sample_positions(t_level, p, q), constraints_cf.shape[1] - 1.0)
    return interp_time(constraints_cf.T, pos).T


def run_chain(
    checkpoint,
    lengths,
    noise_tracks,
    constraints_cf=None,
    coarse_override=None,
    sequence=0,
):
    """Compose the per-level generators; returns finest [F0, T] channels.

    ``noise_tracks`` holds one per-frame scalar track per level (entries
    may be None for zero noise).  ``constraints_cf`` is a channels-first
    finest-rate constraint array for conditional checkpoints.
    ``coarse_override`` replaces the first level's output entirely
    (style transfer, key-frame editing).  ``sequence`` selects whose
    pyramid geometry drives the resampling ratios and noise amplitudes
    (multi-clip checkpoints).
    """
    f0 = checkpoint.n_features
    train = checkpoint.level_lengths[sequence]
    sigmas = checkpoint.sigmas[sequence]
    mask = checkpoint.constrained_mask if constraints_cf is not None else None
    mcol = mask.astype(np.float64)[:, None] if mask is not None else None

    prev = None
    for i, t_i in enumerate(lengths):
        if coarse_override is not None and i == 0:
            prev = np.asarray(coarse_override, dtype=np.float64)
            if prev.shape != (f0, t_i):
                raise ValueError(
                    f"coarse override must be [F0, {t_i}], got {prev.shape}"
                )
            continue
        track = noise_tracks[i]
        if track is None:
            z = np.zeros((f0, t_i))
        else:
            z = broadcast_noise(track[:t_i], f0, sigmas[i])
        if prev is None:
            x = z
            up = None
        else:
            pos = sample_positions(t_i, train[i - 1] - 1, train[i] - 1)
            pos = np.minimum(pos, prev.shape[1] - 1.0)
            up = interp_time(prev.T, pos).T
            x = up + z
        if mcol is not None:
            c_i = _downsample_constraints(constraints_cf, t_i, train[-1] - 1, train[i] - 1)
            x = x * (1.0 - mcol) + c_i * mcol
        y = conv_forward(checkpoint.gen_params[i], x)
        out = y if up is None else y + up
        if mcol is not None:
            out = out * (1.0 - mcol) + c_i * mcol
        prev = out
    return prev


def _noise_tracks(checkpoint, lengths, seed, use_zstar=False):
    tracks = []
    for i, t_i in enumerate(lengths):
        if use_zstar:
            # anchor noises: the stored first-level track, zero above
            tracks.append(checkpoint.z_star[0] if i == 0 else None)
        else:
            tracks.append(normal_track(seed, t_i, "noise", i))
    return tracks


def _as_motion(checkpoint, data_cf):
    return Motion(data_cf.T.copy(), checkpoint.skeleton.n_joints, checkpoint.skeleton.n_contacts)


def generate(checkpoint, out_length, seed=0, use_zstar=False):
    """Unconditional synthesis of ``out_length`` frames.

    With ``use_zstar`` the anchor noises reproduce the training clip
    (lengths must match the training length).
    """
    _require_length(checkpoint, out_length)
    lengths = generation_level_lengths(checkpoint, out_length)
    if use_zstar and out_length != checkpoint.training_length:
        raise ValueError("reconstruction requires the training length")
    if checkpoint.conditional:
        raise ValueError("checkpoint is conditional; use generate_conditional")
    tracks = _noise_tracks(checkpoint, lengths, seed, use_zstar=use_zstar)
    return _as_motion(checkpoint, run_chain(checkpoint, lengths, tracks))


def generate_conditional(checkpoint, constraints, seed=0):
    """Conditional synthesis following finest-rate constraint tracks.

    ``constraints`` is a [L, F0] array (or Motion) whose constrained
    channels are authoritative; the returned motion carries them
    bit-exactly.
    """
    if not checkpoint.conditional:
        raise ValueError("checkpoint has no constraint channels; train conditionally")
    data = constraints.data if isinstance(constraints, Motion) else np.asarray(constraints)
    if data.ndim != 2 or data.shape[1] != checkpoint.n_features:
        raise ValueError(
            f"constraints must be [L, {checkpoint.n_features}], got {data.shape}"
        )
    out_length = data.shape[0]
    _require_length(checkpoint, out_length)
    lengths = generation_level_lengths(checkpoint, out_length)
    tracks = _noise_tracks(checkpoint, lengths, seed)
    cf = np.ascontiguousarray(data.T, dtype=np.float64)
    out = run_chain(checkpoint, lengths, tracks, constraints_cf=cf)
    # finest-rate overwrite is exact, untouched by resampling
    m = checkpoint.constrained_mask[:, None].astype(np.float64)
    out = out * (1.0 - m) + cf * m
    return _as_motion(checkpoint, out)


def _require_length(checkpoint, out_length):
    rf, _ = checkpoint.receptive_field()
    if out_length < rf:
        raise ValueError(
            f"output length {out_length} is shorter than the receptive field {rf}"
        )


def style_transfer(checkpoint, content_skeleton, content, seed=0):
    """Refine a content clip with the detail levels of a style model.

    The content is downsampled to the coarsest rate and replaces the
    first level's output; levels 2..S of the style checkpoint add the
    style's high-frequency detail.  Output length equals the content
    length.
    """
    if checkpoint.conditional:
        raise ValueError("style transfer expects an unconditional checkpoint")
    if content_skeleton.signature() != checkpoint.skeleton.signature():
        raise ValueError("content skeleton does not match the style checkpoint")
    out_length = content.n_frames
    _require_length(checkpoint, out_length)
    lengths = generation_level_lengths(checkpoint, out_length)
    coarse = resample(content, lengths[0]).data.T
    tracks = _noise_tracks(checkpoint, lengths, seed)
    out = run_chain(checkpoint, lengths, tracks, coarse_override=coarse)
    return _as_motion(checkpoint, out)


def keyframe_edit(checkpoint, edited_coarse, deterministic=True, seed=0):
    """Re-synthesize the clip from an edited coarsest-level motion.

    ``edited_coarse`` must have the training pyramid's coarsest length.
    Deterministic mode uses the zero anchor noises of the upper levels,
    so an unedited coarse level reproduces the reconstruction.
    """
    lengths = list(checkpoint.level_lengths[0])
    data = edited_coarse.data if isinstance(edited_coarse, Motion) else np.asarray(edited_coarse)
    if data.shape != (lengths[0], checkpoint.n_features):
        raise ValueError(
            f"edited coarse motion must be [{lengths[0]}, {checkpoint.n_features}], "
            f"got {data.shape}"
        )
    if deterministic:
        tracks = [None] * len(lengths)
    else:
        tracks = _noise_tracks(checkpoint, lengths, seed)
    cf = None
    if checkpoint.conditional:
        # constraints follow the edited coarse content itself
        cf = interp_time(data, sample_positions(lengths[-1], lengths[0] - 1, lengths[-1] - 1)).T
    out = run_chain(checkpoint, lengths, tracks, constraints_cf=cf, coarse_override=data.T)
    return _as_motion(checkpoint, out)


class InteractiveSession:
    """Streamed conditional generation per the limited-receptive-field rule.

    The session accumulates finest-rate constraints; each extension
    regenerates from the full accumulated tracks (noise is counter-based
    per level, so earlier frames' noise never changes) and releases all
    frames except the trailing ``r`` whose values the next extension
    could still touch.  Displayed frames are final: they are bit-equal
    to a one-shot generation over the full constraint history.
    """

    def __init__(self, checkpoint, seed=0):
        if not checkpoint.conditional:
            raise ValueError("interactive sessions need a conditional checkpoint")
        self.checkpoint = checkpoint
        self.seed = seed
        _, self.r = checkpoint.receptive_field()
        self.constraints = np.zeros((0, checkpoint.n_features))
        self.displayed = 0

    @property
    def total_frames(self):
        return self.constraints.shape[0]

    def extend(self, new_constraints):
        """Append constraints; returns (start_index, displayable frames).

        The first call must supply at least the receptive field's worth
        of frames.  After every call exactly ``r`` frames stay pending.
        """
        new = np.asarray(new_constraints, dtype=np.float64)
        if new.ndim != 2 or new.shape[1] != self.checkpoint.n_features:
            raise ValueError(
                f"constraints must be [L, {self.checkpoint.n_features}], got {new.shape}"
            )
        if new.shape[0] < 1:
            raise ValueError("extension must supply at least one frame")
        self.constraints = np.concatenate([self.constraints, new], axis=0)
        motion = generate_conditional(self.checkpoint, self.constraints, seed=self.seed)
        release_until = max(self.total_frames - self.r, self.displayed)
        start = self.displayed
        frames = motion.data[start:release_until].copy()
        self.displayed = release_until
        return start, frames
