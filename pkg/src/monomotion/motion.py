"""Motion representation: skeletons, per-frame features, kinematics.

A motion is a [T, F0] float64 matrix whose columns are, in order: 6-D
rotation features for every joint (6 per joint, in skeleton order), the
root displacement (3), and one contact value per foot joint.  Contact
values are binary on training input and continuous in [0, 1] once a
sequence has been resampled; binarization happens only at export/IK
time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROT_Q = 6  # rotation features per joint
DEFAULT_CONTACT_EPS_FACTOR = 0.006  # of skeleton height, per frame


class DegenerateRotationError(ValueError):
    """6-D rotation features whose vectors cannot be orthonormalized."""


@dataclass
class Skeleton:
    """Kinematic tree with offsets in length units.

    ``parents[j]`` is the parent index of joint j (-1 for the single
    root); parents precede children.  ``foot_joints`` lists the joints
    that carry contact labels, in feature order.
    """

    names: list
    parents: list
    offsets: np.ndarray  # [J, 3]
    foot_joints: list = field(default_factory=list)
    frame_time: float = 1.0 / 30.0
    # per-joint BVH channel metadata, preserved through parse/write round trips
    rotation_orders: list = field(default_factory=list)
    has_position_channels: list = field(default_factory=list)
    end_sites: dict = field(default_factory=dict)

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        roots = [j for j, p in enumerate(self.parents) if p < 0]
        if len(roots) != 1 or roots[0] != 0:
            raise ValueError("skeleton must have exactly one root at index 0")
        for j, p in enumerate(self.parents):
            if p >= j and j > 0:
                raise ValueError("parents must precede children")
        for f in self.foot_joints:
            if not 0 <= f < len(self.parents):
                raise ValueError(f"foot joint index {f} out of range")
        if not self.rotation_orders:
            self.rotation_orders = ["ZYX"] * len(self.parents)
        if not self.has_position_channels:
            self.has_position_channels = [j == 0 for j in range(len(self.parents))]

    @property
    def n_joints(self):
        return len(self.parents)

    @property
    def n_contacts(self):
        return len(self.foot_joints)

    @property
    def n_features(self):
        return self.n_joints * ROT_Q + 3 + self.n_contacts

    def children(self, j):
        return [c for c, p in enumerate(self.parents) if p == j]

    def height(self):
        """Vertical extent of the rest pose (identity rotations)."""
        pos = rest_positions(self)
        extent = float(pos[:, 1].max() - pos[:, 1].min())
        return extent if extent > 0.0 else 1.0

    def contact_eps(self):
        """Default contact-speed threshold, in length units per frame."""
        return DEFAULT_CONTACT_EPS_FACTOR * self.height()

    def signature(self):
        """Structural identity used to match checkpoints with motions."""
        return {
            "names": list(self.names),
            "parents": [int(p) for p in self.parents],
            "offsets": np.round(self.offsets, 6).tolist(),
            "foot_joints": [int(f) for f in self.foot_joints],
        }


@dataclass
class Motion:
    """Per-frame feature matrix [T, F0] tied to a skeleton layout."""

    data: np.ndarray
    n_joints: int
    n_contacts: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        expected = self.n_joints * ROT_Q + 3 + self.n_contacts
        if self.data.ndim != 2 or self.data.shape[1] != expected:
            raise ValueError(
                f"motion matrix has {self.data.shape} entries, expected T x {expected}"
            )

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def rotations(self):
        """View [T, J, 6]."""
        j = self.n_joints
        return self.data[:, : j * ROT_Q].reshape(self.n_frames, j, ROT_Q)

    @property
    def root_disp(self):
        """View [T, 3]."""
        j = self.n_joints * ROT_Q
        return self.data[:, j : j + 3]

    @property
    def contacts(self):
        """View [T, C]."""
        return self.data[:, self.n_joints * ROT_Q + 3 :]

    def copy(self):
        return Motion(self.data.copy(), self.n_joints, self.n_contacts)

    def check_finite(self):
        if not np.isfinite(self.data).all():
            raise FloatingPointError("motion contains non-finite values")
        return self


def rotation_channel_slice(j):
    return slice(j * ROT_Q, (j + 1) * ROT_Q)


def displacement_slice(n_joints):
    return slice(n_joints * ROT_Q, n_joints * ROT_Q + 3)


def contact_slice(n_joints, n_contacts):
    start = n_joints * ROT_Q + 3
    return slice(start, start + n_contacts)


# ---------------------------------------------------------------------------
# rotations


def rot6d_to_matrix(six):
    """Orthonormalize 6 rotation features into a proper rotation matrix.

    The two 3-vectors become the first two rows via Gram-Schmidt; the
    third row is their cross product, so det = +1.  Accepts [..., 6].
    """
    six = np.asarray(six, dtype=np.float64)
    a1 = six[..., 0:3]
    a2 = six[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < 1e-12):
        raise DegenerateRotationError("first rotation vector is (near) zero")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 < 1e-12):
        raise DegenerateRotationError("rotation vectors are (near) parallel")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-2)


def matrix_to_rot6d(mat):
    """Inverse of :func:`rot6d_to_matrix`: first two rows, flattened."""
    mat = np.asarray(mat, dtype=np.float64)
    return np.concatenate([mat[..., 0, :], mat[..., 1, :]], axis=-1)


def identity_rot6d():
    return np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


# ---------------------------------------------------------------------------
# kinematics


def rest_positions(skeleton):
    """Joint positions of the rest pose (identity rotations, zero root)."""
    pos = np.zeros((skeleton.n_joints, 3))
    for j in range(1, skeleton.n_joints):
        pos[j] = pos[skeleton.parents[j]] + skeleton.offsets[j]
    return pos


def forward_kinematics(skeleton, motion):
    """Global joint positions [T, J, 3] (right-handed, y-up).

    The root sits at the stored displacement; every child sits at its
    parent plus the parent's global rotation applied to the child's
    offset.  Global rotations compose down the tree.
    """
    if motion.n_joints != skeleton.n_joints:
        raise ValueError(
            f"motion has {motion.n_joints} joints, skeleton has {skeleton.n_joints}"
        )
    t = motion.n_frames
    rots = rot6d_to_matrix(motion.rotations)  # [T, J, 3, 3]
    glob = np.empty_like(rots)
    pos = np.empty((t, skeleton.n_joints, 3))
    glob[:, 0] = rots[:, 0]
    pos[:, 0] = motion.root_disp
    for j in range(1, skeleton.n_joints):
        p = skeleton.parents[j]
        glob[:, j] = glob[:, p] @ rots[:, j]
        pos[:, j] = pos[:, p] + np.einsum("tab,b->ta", glob[:, p], skeleton.offsets[j])
    return pos


def joint_speeds(positions):
    """Per-frame speeds [T, J] in length units per frame.

    Frame 0 uses the forward difference, later frames the backward one.
    """
    if positions.shape[0] < 2:
        raise ValueError("need at least two frames to estimate speeds")
    vel = np.empty_like(positions)
    vel[1:] = positions[1:] - positions[:-1]
    vel[0] = vel[1]
    return np.linalg.norm(vel, axis=-1)


def contact_labels(skeleton, motion, eps_vel=None):
    """Binary contact matrix [T, |F|] from foot-joint FK speeds."""
    if motion.n_frames < 2:
        raise ValueError("contact labels need at least two frames")
    if eps_vel is None:
        eps_vel = skeleton.contact_eps()
    if eps_vel <= 0.0:
        raise ValueError("eps_vel must be positive")
    pos = forward_kinematics(skeleton, motion)
    speeds = joint_speeds(pos)[:, skeleton.foot_joints]
    return (speeds < eps_vel).astype(np.float64)


def attach_contacts(skeleton, motion, eps_vel=None):
    """Overwrite a motion's contact channels with freshly extracted labels."""
    labels = contact_labels(skeleton, motion, eps_vel)
    out = motion.copy()
    out.contacts[:] = labels
    return out


# ---------------------------------------------------------------------------
# temporal resampling


def sample_positions(n_out, p, q):
    """Positions u * p / q for u in [0, n_out), each rounded once in f64."""
    return (np.arange(n_out) * float(p)) / float(q)


def interp_time(data, positions):
    """Linear interpolation of [T, F] rows at real-valued frame positions.

    Written as a + f*(b - a) so constant signals are preserved exactly;
    rows landing exactly on a sample (f = 0 or 1) are copied bitwise.
    """
    t = data.shape[0]
    if t == 1:
        return np.repeat(data, len(positions), axis=0)
    pos = np.clip(positions, 0.0, t - 1.0)
    i0 = np.minimum(pos.astype(np.intp), t - 2)
    f = pos - i0
    out = data[i0] + f[:, None] * (data[i0 + 1] - data[i0])
    exact = f == 1.0
    if exact.any():
        out[exact] = data[i0[exact] + 1]
    return out


def resample(motion, t_target):
    """Endpoint-aligned linear resampling to ``t_target`` frames.

    Frame 0 maps to frame 0 and the last frame to the last, for both
    up- and downsampling.  Resampling to the same length is the
    identity, bit for bit.
    """
    if t_target < 2:
        raise ValueError(f"target length must be at least 2, got {t_target}")
    pos = sample_positions(t_target, motion.n_frames - 1, t_target - 1)
    return Motion(interp_time(motion.data, pos), motion.n_joints, motion.n_contacts)


def round_half_up(x):
    return int(np.floor(x + 0.5))


def level_lengths(finest_length, scale_factor, n_levels):
    """Pyramid lengths T_i = round(T_S * F**(i-S)), coarsest first."""
    return [
        round_half_up(finest_length * scale_factor ** (i - n_levels))
        for i in range(1, n_levels + 1)
    ]


@dataclass
class Pyramid:
    """Coarse-to-fine resampled copies of a motion plus noise amplitudes.

    ``sigmas[i]`` is the mean squared residual between level i and the
    upsampled level below it (the first level gets 1.0: it is generated
    from pure noise, so its scale is absorbed by the first generator).
    """

    levels: list
    sigmas: list
    scale_factor: float

    @property
    def n_levels(self):
        return len(self.levels)

    @property
    def lengths(self):
        return [m.n_frames for m in self.levels]


def build_pyramid(motion, scale_factor=4.0 / 3.0, n_levels=7, min_coarse=8):
    """Resample a motion into ``n_levels`` lengths and measure residuals."""
    if n_levels < 2:
        raise ValueError("a pyramid needs at least two levels")
    if scale_factor <= 1.0:
        raise ValueError("scale factor must exceed 1")
    lengths = level_lengths(motion.n_frames, scale_factor, n_levels)
    if lengths[0] < min_coarse:
        raise ValueError(
            f"coarsest level would have {lengths[0]} frames; need at least {min_coarse}"
        )
    levels = [resample(motion, t) for t in lengths]
    sigmas = [1.0]
    for i in range(1, n_levels):
        up = resample(levels[i - 1], lengths[i])
        residual = up.data - levels[i].data
        sigmas.append(float(np.sum(residual * residual) / residual.size))
    return Pyramid(levels, sigmas, scale_factor)
