"""Block-wise progressive adversarial training.

Levels are trained two at a time; while a block trains, everything
below it is frozen and evaluated as constants.  Each iteration runs the
critic step(s) (WGAN-GP with the penalty differentiated through the
graph) and one generator step over weighted adversarial,
reconstruction, and contact-consistency terms.  Every random draw comes
from seed-keyed streams, so identical configs produce bit-identical
checkpoints.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import tensor as tz
from .checkpoint import Checkpoint
from .config import TrainConfig
from .graph import build_motion_graph
from .losses import (
    contact_loss_graph,
    critic_loss_graph,
    overwrite_channels,
    reconstruction_term,
)
from .motion import build_pyramid
from .networks import (
    LevelSpec,
    broadcast_noise,
    conv_stack,
    discriminator_level,
    init_params,
    upsample_channels,
)
from .rng import normal_track, stream
from .synthesis import (
    _noise_tracks,
    constrained_channel_mask,
    conv_forward,
    generation_level_lengths,
    run_chain,
)


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; the run is aborted."""


def motion_fingerprint(motion):
    return hashlib.sha256(np.ascontiguousarray(motion.data, dtype="<f8").tobytes()).hexdigest()


def training_blocks(n_levels):
    """Consecutive level pairs: {1,2}, {3,4}, ... (0-based indices)."""
    return [list(range(i, min(i + 2, n_levels))) for i in range(0, n_levels, 2)]


def _chain_live(prev_const, pyr_lengths, sigmas, tracks, block, gen_params, mask=None, cf=None):
    """Evaluate the block's levels with live graphs; returns per-level tensors."""
    f0 = gen_params[0].layers[0].w.data.shape[1]
    outputs = {}
    prev = tz.constant(prev_const) if prev_const is not None else None
    for i in block:
        t_i = pyr_lengths[i]
        z = tz.constant(broadcast_noise(tracks[i], f0, sigmas[i]))
        if prev is None:
            x, up = z, None
        else:
            up = _upsample_graph(prev, t_i)
            x = tz.add(up, z)
        if mask is not None:
            x = overwrite_channels(x, cf[i], mask)
        y = conv_stack(gen_params[i], x)
        out = y if up is None else tz.add(y, up)
        if mask is not None:
            out = overwrite_channels(out, cf[i], mask)
        outputs[i] = out
        prev = out
    return outputs


def _upsample_graph(x, t_out):
    """Endpoint-aligned linear upsampling of a [C, T] tensor, differentiable.

    Same arithmetic as :func:`monomotion.motion.interp_time` (a + f*(b-a),
    exact rows copied) so graph and array paths agree bit for bit.
    """
    from .motion import sample_positions

    t_in = x.data.shape[1]
    pos = sample_positions(t_out, t_in - 1, t_out - 1)
    i0 = np.minimum(pos.astype(np.intp), t_in - 2)
    frac = pos - i0
    i1 = i0 + 1
    exact = frac == 1.0
    i0 = np.where(exact, i1, i0)  # exact rows: a == b, f*(b-a) adds zero
    frac = np.where(exact, 0.0, frac)
    a = tz.take(x, i0, axis=1)
    b = tz.take(x, i1, axis=1)
    return tz.add(a, tz.mul(tz.constant(frac), tz.sub(b, a)))


def _constraint_levels(source_cf, lengths):
    """Constraint tracks per level by endpoint-aligned downsampling."""
    finest = source_cf.shape[1]
    out = []
    for t_i in lengths:
        out.append(upsample_channels(source_cf, t_i, finest - 1, t_i - 1))
    return out


def train(config, skeleton, motions, progress=None, base_checkpoint=None):
    """Train on one or more motions of a shared skeleton.

    ``progress`` (optional) receives one telemetry dict every few
    iterations.  With ``config.conditional`` a ``base_checkpoint``
    (unconditional, same sequence) must be supplied; constraint tracks
    are sampled from it during training.
    """
    if not motions:
        raise ValueError("need at least one training motion")
    for m in motions:
        m.check_finite()
        if m.n_joints != skeleton.n_joints:
            raise ValueError("motion does not match skeleton")
    if config.conditional:
        if base_checkpoint is None:
            raise ValueError("conditional training needs a base checkpoint")
        if len(motions) != 1:
            raise ValueError("conditional training uses a single sequence")
        if not config.constrained_joints:
            raise ValueError("conditional training needs a constraint set")

    graph = build_motion_graph(skeleton)
    f0 = skeleton.n_features
    pyramids = [
        build_pyramid(m, config.scale_factor, config.n_levels) for m in motions
    ]
    n_seq = len(motions)
    s = config.n_levels
    seed = config.seed

    mask = None
    if config.conditional:
        mask = constrained_channel_mask(skeleton, config.constrained_joints)

    specs = [
        LevelSpec(i + 1, pyramids[0].lengths[i], pyramids[0].sigmas[i], f0)
        for i in range(s)
    ]
    gen_params = [init_params(seed, graph, specs[i], "generator") for i in range(s)]
    disc_params = [init_params(seed, graph, specs[i], "discriminator") for i in range(s)]
    z_stars = [
        normal_track(seed, pyramids[k].lengths[0], "zstar", k) for k in range(n_seq)
    ]

    real_cf = [[pyr.levels[i].data.T.copy() for i in range(s)] for pyr in pyramids]

    for block_idx, block in enumerate(training_blocks(s)):
        gen_opt = {
            i: tz.AdamState(
                gen_params[i].parameters(), config.learning_rate, config.beta1, config.beta2
            )
            for i in block
        }
        disc_opt = {
            i: tz.AdamState(
                disc_params[i].parameters(), config.learning_rate, config.beta1, config.beta2
            )
            for i in block
        }
        top = block[-1] + 1
        for it in range(config.iterations_per_level):
            k = it % n_seq
            pyr = pyramids[k]
            noise_rng = stream(seed, "train", block_idx, it)
            telemetry = {"block": block_idx, "iteration": it, "sequence": k}

            cf_levels = None
            if config.conditional:
                # sample a constraint source from the base model at the
                # training length (bypasses the public receptive-field
                # minimum: short clips with deep pyramids are still valid)
                sample_seed = int(noise_rng.integers(0, 2**31))
                base_lengths = generation_level_lengths(base_checkpoint, pyr.lengths[-1])
                base_tracks = _noise_tracks(base_checkpoint, base_lengths, sample_seed)
                sample_cf = run_chain(base_checkpoint, base_lengths, base_tracks)
                cf_levels = _constraint_levels(sample_cf, pyr.lengths)

            for _ in range(config.critic_steps):
                tracks = [noise_rng.standard_normal(pyr.lengths[i]) for i in range(top)]
                critic_total = None
                per_level = _frozen_per_level(
                    pyr.lengths, pyr.sigmas, tracks, top, gen_params, mask, cf_levels
                )
                for i in block:
                    lam = float(noise_rng.uniform())
                    loss_i = critic_loss_graph(
                        disc_params[i], real_cf[k][i], per_level[i], lam, config.lambda_gp
                    )
                    critic_total = loss_i if critic_total is None else tz.add(critic_total, loss_i)
                _check_finite(critic_total.item(), "critic loss")
                telemetry["critic_loss"] = critic_total.item()
                wrt = [p for i in block for p in disc_params[i].parameters()]
                grads = tz.backward(critic_total, wrt)
                for i in block:
                    tz.adam_step(disc_opt[i], grads, disc_params[i].kernel_masks())

            # generator step
            tracks = [noise_rng.standard_normal(pyr.lengths[i]) for i in range(top)]
            if block[0] == 0:
                frozen_prev = None
            else:
                lower = _frozen_per_level(
                    pyr.lengths, pyr.sigmas, tracks, block[0], gen_params, mask, cf_levels
                )
                frozen_prev = lower[block[0] - 1]
            fakes = _chain_live(
                frozen_prev, pyr.lengths, pyr.sigmas, tracks, block, gen_params, mask, cf_levels
            )
            gen_total = None
            rec_report = 0.0
            con_report = 0.0
            for i in block:
                adv = tz.mul(tz.constant(-config.lambda_adv), discriminator_level(disc_params[i], fakes[i]))
                rec = _reconstruction_level(
                    gen_params[i], pyramids, i, z_stars, mask
                )
                rec_report += rec.item()
                term = tz.add(adv, tz.mul(tz.constant(config.lambda_rec), rec))
                if config.use_contact_loss and skeleton.foot_joints:
                    con = contact_loss_graph(skeleton, fakes[i])
                    con_report += con.item()
                    term = tz.add(term, tz.mul(tz.constant(config.lambda_con), con))
                gen_total = term if gen_total is None else tz.add(gen_total, term)
            _check_finite(gen_total.item(), "generator loss")
            telemetry["generator_loss"] = gen_total.item()
            telemetry["reconstruction_loss"] = rec_report / len(block)
            telemetry["contact_loss"] = con_report / len(block)
            wrt = [p for i in block for p in gen_params[i].parameters()]
            grads = tz.backward(gen_total, wrt)
            for i in block:
                tz.adam_step(gen_opt[i], grads, gen_params[i].kernel_masks())

            if progress is not None and (
                it % config.telemetry_every == 0 or it == config.iterations_per_level - 1
            ):
                progress(telemetry)

    checkpoint = Checkpoint(
        skeleton=skeleton,
        config=config,
        level_lengths=[pyr.lengths for pyr in pyramids],
        sigmas=[pyr.sigmas for pyr in pyramids],
        gen_params=gen_params,
        disc_params=disc_params,
        z_star=z_stars,
        coarse_levels=[pyr.levels[0].data.copy() for pyr in pyramids],
        fingerprints=[motion_fingerprint(m) for m in motions],
        conditional=config.conditional,
        constrained_mask=mask,
        recon_errors=[],
    )
    checkpoint.recon_errors = _measure_recon_errors(checkpoint, pyramids)
    return checkpoint


def _frozen_per_level(lengths, sigmas, tracks, top, gen_params, mask, cf_levels):
    """All level outputs of the frozen chain as arrays."""
    f0 = gen_params[0].layers[0].w.data.shape[1]
    mcol = mask.astype(np.float64)[:, None] if mask is not None else None
    outputs = {}
    prev = None
    for i in range(top):
        t_i = lengths[i]
        z = broadcast_noise(tracks[i], f0, sigmas[i])
        if prev is None:
            x, up = z, None
        else:
            up = upsample_channels(prev, t_i)
            x = up + z
        if mcol is not None:
            x = x * (1.0 - mcol) + cf_levels[i] * mcol
        y = conv_forward(gen_params[i], x)
        out = y if up is None else y + up
        if mcol is not None:
            out = out * (1.0 - mcol) + cf_levels[i] * mcol
        outputs[i] = out
        prev = out
    return outputs


def _reconstruction_level(g_params, pyramids, level, z_stars, mask):
    terms = []
    for k, pyr in enumerate(pyramids):
        target = pyr.levels[level].data.T
        if level == 0:
            z = np.repeat(z_stars[k][None, :], target.shape[0], axis=0)
            up = None
        else:
            z = np.zeros_like(target)
            up = upsample_channels(pyr.levels[level - 1].data.T, target.shape[1])
        terms.append(reconstruction_term(g_params, up, z, target, mask))
    total = terms[0]
    for t in terms[1:]:
        total = tz.add(total, t)
    return tz.mul(total, tz.constant(1.0 / len(terms)))


def _check_finite(value, what):
    if not np.isfinite(value):
        raise TrainingDiverged(f"{what} became non-finite")


def _measure_recon_errors(checkpoint, pyramids):
    """Mean |generated - training| when driving the chain with the anchors."""
    errors = []
    for k, pyr in enumerate(pyramids):
        tracks = [checkpoint.z_star[k] if i == 0 else None for i in range(checkpoint.n_levels)]
        cf = None
        if checkpoint.conditional:
            cf = np.ascontiguousarray(pyr.levels[-1].data.T)
        out = run_chain(checkpoint, pyr.lengths, tracks, constraints_cf=cf, sequence=k)
        errors.append(float(np.mean(np.abs(out - pyr.levels[-1].data.T))))
    return errors


def train_conditional(config, skeleton, motion, base_checkpoint, progress=None):
    """Conditional training on the base checkpoint's sequence."""
    cfg = TrainConfig.from_dict({**config.to_dict(), "conditional": True})
    if not cfg.constrained_joints:
        raise ValueError("conditional training needs constrained joints")
    return train(cfg, skeleton, [motion], progress=progress, base_checkpoint=base_checkpoint)
