"""Training losses: adversarial (WGAN-GP), reconstruction, contact consistency.

The gradient-norm penalty differentiates the critic's input gradient a
second time, which is why everything here is built on the closed op set
of :mod:`monomotion.tensor`.  The contact term runs forward kinematics
inside the graph so foot speeds can push back on the rotations.
"""

from __future__ import annotations

import numpy as np

from . import tensor as tz
from .motion import ROT_Q, displacement_slice, contact_slice
from .networks import conv_stack, discriminator_level, upsample_channels
from .rng import stream

# Stabilizer inside graph-side normalizations: generated rotation
# features can pass near zero early in training and must not NaN out.
_NORM_EPS = 1e-12


def norm2(x):
    """Frobenius norm as a graph scalar (tiny floor keeps backward finite)."""
    return tz.sqrt(tz.tsum(tz.mul(x, x)) + 1e-24)


def overwrite_channels(x, values, channel_mask):
    """Replace masked channels of a [C, T] tensor with constant tracks."""
    m = channel_mask.astype(np.float64)[:, None]
    vals = np.asarray(values, dtype=np.float64)
    return tz.add(tz.mul(x, tz.constant(1.0 - m)), tz.constant(vals * m))


def critic_loss_graph(d_params, real, fake, lam, lambda_gp):
    """WGAN-GP critic loss on channels-first arrays, as a graph scalar.

    ``lam`` is the interpolation coefficient of the penalty point
    lam*fake + (1-lam)*real; the penalty's gradient flows through a
    second differentiation pass of the critic.
    """
    d_fake = discriminator_level(d_params, tz.constant(fake))
    d_real = discriminator_level(d_params, tz.constant(real))
    qhat = tz.parameter(lam * fake + (1.0 - lam) * real)
    d_hat = discriminator_level(d_params, qhat)
    grad_x = tz.grad_graph(d_hat, [qhat])[id(qhat)]
    penalty = (norm2(grad_x) - 1.0) ** 2
    return tz.add(tz.sub(d_fake, d_real), tz.mul(tz.constant(lambda_gp), penalty))


def adversarial_losses(d_params, real, fake, seed, lambda_gp=1.0):
    """(critic loss, generator loss) values for one real/fake pair."""
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ValueError(f"real {real.shape} and fake {fake.shape} differ")
    lam = float(stream(seed, "gp-lambda").uniform())
    critic = critic_loss_graph(d_params, real, fake, lam, lambda_gp).item()
    gen = -discriminator_level(d_params, tz.constant(fake)).item()
    for v in (critic, gen):
        if not np.isfinite(v):
            raise FloatingPointError("non-finite adversarial loss")
    return critic, gen


def reconstruction_term(g_params, up_prev, z_star, target, constrained=None):
    """Mean absolute reconstruction error at one level, as a graph scalar.

    ``up_prev`` is the upsampled lower pyramid level (None at the first
    level), ``z_star`` the anchor noise, ``target`` the pyramid level to
    reproduce; all channels-first arrays.  With a constrained-channel
    mask the overwrite trick is applied on input and output, mirroring
    conditional generation.
    """
    target = np.asarray(target, dtype=np.float64)
    if up_prev is None:
        x = tz.constant(z_star)
        if constrained is not None:
            x = overwrite_channels(x, target, constrained)
        out = conv_stack(g_params, x)
    else:
        up = np.asarray(up_prev, dtype=np.float64)
        x = tz.constant(up + z_star)
        if constrained is not None:
            x = overwrite_channels(x, target, constrained)
        out = tz.add(conv_stack(g_params, x), tz.constant(up))
    if constrained is not None:
        out = overwrite_channels(out, target, constrained)
    return tz.mean(tz.absolute(tz.sub(out, tz.constant(target))))


def reconstruction_loss(g_params, pyramids, level, z_stars, constrained=None):
    """Mean reconstruction error across training sequences at one level."""
    terms = []
    for k, pyr in enumerate(pyramids):
        target = pyr.levels[level].data.T
        if level == 0:
            z = np.repeat(z_stars[k][None, :], target.shape[0], axis=0)
            up = None
        else:
            z = np.zeros_like(target)
            up = upsample_channels(pyr.levels[level - 1].data.T, target.shape[1])
        terms.append(reconstruction_term(g_params, up, z, target, constrained))
    total = terms[0]
    for t in terms[1:]:
        total = tz.add(total, t)
    return tz.mul(total, tz.constant(1.0 / len(terms)))


# ---------------------------------------------------------------------------
# contact consistency


def _cols(x, idx):
    return tz.take(x, np.asarray(idx, dtype=np.intp), axis=1)


def _normalize_rows(v):
    n = tz.sqrt(tz.tsum(tz.mul(v, v), axis=1, keepdims=True) + _NORM_EPS)
    return tz.div(v, n)


def _rot6d_rows_to_matrices(six):
    """[T, 6] features -> [T, 3, 3] matrices, eps-stabilized Gram-Schmidt."""
    a1 = _cols(six, [0, 1, 2])
    a2 = _cols(six, [3, 4, 5])
    b1 = _normalize_rows(a1)
    proj = tz.tsum(tz.mul(b1, a2), axis=1, keepdims=True)
    b2 = _normalize_rows(tz.sub(a2, tz.mul(proj, b1)))

    def comp(u, i, v, j):
        return tz.mul(_cols(u, [i]), _cols(v, [j]))

    b3 = tz.concat(
        [
            tz.sub(comp(b1, 1, b2, 2), comp(b1, 2, b2, 1)),
            tz.sub(comp(b1, 2, b2, 0), comp(b1, 0, b2, 2)),
            tz.sub(comp(b1, 0, b2, 1), comp(b1, 1, b2, 0)),
        ],
        axis=1,
    )
    t = six.data.shape[0]
    return tz.reshape(tz.concat([b1, b2, b3], axis=1), (t, 3, 3))


def _bmm(a, b):
    """Batched [T,3,3] @ [T,3,3] via broadcast-multiply and reduce."""
    t = a.data.shape[0]
    a4 = tz.reshape(a, (t, 3, 3, 1))
    b4 = tz.reshape(b, (t, 1, 3, 3))
    return tz.tsum(tz.mul(a4, b4), axis=2)


def _rotate_const(a, vec):
    """[T,3,3] rotations applied to a constant 3-vector -> [T,3]."""
    v = tz.constant(np.asarray(vec, dtype=np.float64).reshape(1, 1, 3))
    return tz.tsum(tz.mul(a, v), axis=2)


def fk_positions_graph(skeleton, feats):
    """Differentiable FK: [F0, T] features -> list of [T, 3] joint positions."""
    x = tz.transpose(feats, (1, 0))  # [T, F0]
    disp = displacement_slice(skeleton.n_joints)
    globals_, positions = [], []
    for j in range(skeleton.n_joints):
        six = _cols(x, range(j * ROT_Q, (j + 1) * ROT_Q))
        local = _rot6d_rows_to_matrices(six)
        if j == 0:
            globals_.append(local)
            positions.append(_cols(x, range(disp.start, disp.stop)))
        else:
            p = skeleton.parents[j]
            globals_.append(_bmm(globals_[p], local))
            positions.append(
                tz.add(positions[p], _rotate_const(globals_[p], skeleton.offsets[j]))
            )
    return positions


def contact_loss_graph(skeleton, feats):
    """Contact consistency on a [F0, T] tensor, as a graph scalar.

    Mean over frames and feet of squared FK speed times the shifted
    sigmoid s(L) = 1 / (1 + exp(5 - 10 L)); frame 0 reuses frame 1's
    velocity (forward difference).
    """
    t = feats.data.shape[1]
    if t < 2:
        raise ValueError("contact loss needs at least two frames")
    if not skeleton.foot_joints:
        return tz.constant(0.0)
    x = tz.transpose(feats, (1, 0))
    cslice = contact_slice(skeleton.n_joints, skeleton.n_contacts)
    positions = fk_positions_graph(skeleton, feats)
    total = None
    for k, foot in enumerate(skeleton.foot_joints):
        pos = positions[foot]
        delta = tz.sub(
            tz.take(pos, np.arange(1, t), axis=0), tz.take(pos, np.arange(0, t - 1), axis=0)
        )
        vel = tz.concat([tz.take(delta, np.array([0]), axis=0), delta], axis=0)
        speed2 = tz.tsum(tz.mul(vel, vel), axis=1)
        labels = tz.reshape(_cols(x, [cslice.start + k]), (t,))
        gate = tz.div(
            tz.constant(1.0),
            tz.add(tz.constant(1.0), tz.exp(tz.sub(tz.constant(5.0), tz.mul(tz.constant(10.0), labels)))),
        )
        term = tz.tsum(tz.mul(speed2, gate))
        total = term if total is None else tz.add(total, term)
    return tz.mul(total, tz.constant(1.0 / (t * len(skeleton.foot_joints))))


def contact_consistency_loss(skeleton, motion):
    """Contact consistency of a motion, as a float."""
    return contact_loss_graph(skeleton, tz.constant(motion.data.T)).item()


def contact_gate(x):
    """The shifted sigmoid s(x) = 1 / (1 + exp(5 - 10 x)) on arrays."""
    return 1.0 / (1.0 + np.exp(5.0 - 10.0 * np.asarray(x, dtype=np.float64)))
