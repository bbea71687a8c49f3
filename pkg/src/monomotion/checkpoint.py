"""Checkpoint container and its binary file format.

Layout: magic ``GNMC1``, a uint32 header length, a JSON header (sorted
keys), then raw little-endian float64 blocks in header-listed order.
Identical training runs serialize to identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .graph import build_motion_graph
from .motion import Skeleton
from .networks import LevelSpec, init_params, stack_receptive_field

MAGIC = b"GNMC1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Everything needed to synthesize: skeleton, pyramid geometry,
    per-level parameters, anchor noises, and the training config."""

    skeleton: Skeleton
    config: TrainConfig
    level_lengths: list  # per sequence: coarse-to-fine frame counts
    sigmas: list  # per sequence: noise amplitudes per level
    gen_params: list
    disc_params: list
    z_star: list  # per sequence: coarse anchor noise track
    coarse_levels: list  # per sequence: [T_1, F0] coarsest pyramid level
    fingerprints: list
    conditional: bool = False
    constrained_mask: np.ndarray = None  # bool [F0] or None
    recon_errors: list = field(default_factory=list)

    @property
    def n_levels(self):
        return len(self.gen_params)

    @property
    def n_sequences(self):
        return len(self.level_lengths)

    @property
    def n_features(self):
        return self.skeleton.n_features

    @property
    def training_length(self):
        return self.level_lengths[0][-1]

    def motion_graph(self):
        return build_motion_graph(self.skeleton)

    def receptive_field(self):
        """(R, r) at the finest rate, from the first sequence's lengths."""
        return stack_receptive_field(self.level_lengths[0])

    def save(self, path):
        header, blocks = self._serialize()
        payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)
            for block in blocks:
                fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())

    def _serialize(self):
        blocks = []
        block_meta = []

        def put(name, arr):
            arr = np.asarray(arr, dtype=np.float64)
            block_meta.append({"name": name, "shape": list(arr.shape)})
            blocks.append(arr)

        for i, (gp, dp) in enumerate(zip(self.gen_params, self.disc_params)):
            for name, arr in gp.named_arrays():
                put(f"gen{i}.{name}", arr)
            for name, arr in dp.named_arrays():
                put(f"disc{i}.{name}", arr)
        for k, z in enumerate(self.z_star):
            put(f"zstar{k}", z)
        for k, coarse in enumerate(self.coarse_levels):
            put(f"coarse{k}", coarse)

        sk = self.skeleton
        header = {
            "version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "skeleton": {
                "names": list(sk.names),
                "parents": [int(p) for p in sk.parents],
                "offsets": sk.offsets.tolist(),
                "foot_joints": [int(f) for f in sk.foot_joints],
                "frame_time": sk.frame_time,
                "rotation_orders": list(sk.rotation_orders),
                "has_position_channels": [bool(b) for b in sk.has_position_channels],
                "end_sites": {str(k): list(v) for k, v in sk.end_sites.items()},
            },
            "level_lengths": self.level_lengths,
            "sigmas": self.sigmas,
            "fingerprints": self.fingerprints,
            "conditional": self.conditional,
            "constrained_mask": None
            if self.constrained_mask is None
            else [bool(b) for b in self.constrained_mask],
            "recon_errors": self.recon_errors,
            "blocks": block_meta,
        }
        return header, blocks

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(len(MAGIC))
            if magic != MAGIC:
                raise ValueError(f"not a checkpoint file (magic {magic!r})")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode())
            if header["version"] != FORMAT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header['version']}")
            arrays = {}
            for meta in header["blocks"]:
                shape = tuple(meta["shape"])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(count * 8)
                arrays[meta["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()

        sk_d = header["skeleton"]
        skeleton = Skeleton(
            names=sk_d["names"],
            parents=sk_d["parents"],
            offsets=np.asarray(sk_d["offsets"]),
            foot_joints=sk_d["foot_joints"],
            frame_time=sk_d["frame_time"],
            rotation_orders=sk_d["rotation_orders"],
            has_position_channels=sk_d["has_position_channels"],
            end_sites={int(k): v for k, v in sk_d["end_sites"].items()},
        )
        config = TrainConfig.from_dict(header["config"])
        graph = build_motion_graph(skeleton)
        n_levels = config.n_levels
        gen_params, disc_params = [], []
        for i in range(n_levels):
            spec = LevelSpec(i + 1, header["level_lengths"][0][i], 1.0, skeleton.n_features)
            gp = init_params(0, graph, spec, "generator")
            dp = init_params(0, graph, spec, "discriminator")
            gp.load_arrays(
                {n.split(".", 1)[1]: a for n, a in arrays.items() if n.startswith(f"gen{i}.")}
            )
            dp.load_arrays(
                {n.split(".", 1)[1]: a for n, a in arrays.items() if n.startswith(f"disc{i}.")}
            )
            gen_params.append(gp)
            disc_params.append(dp)

        n_seq = len(header["level_lengths"])
        z_star = [arrays[f"zstar{k}"] for k in range(n_seq)]
        coarse = [arrays[f"coarse{k}"] for k in range(n_seq)]
        mask = header["constrained_mask"]
        return cls(
            skeleton=skeleton,
            config=config,
            level_lengths=header["level_lengths"],
            sigmas=header["sigmas"],
            gen_params=gen_params,
            disc_params=disc_params,
            z_star=z_star,
            coarse_levels=coarse,
            fingerprints=header["fingerprints"],
            conditional=header["conditional"],
            constrained_mask=None if mask is None else np.asarray(mask, dtype=bool),
            recon_errors=header["recon_errors"],
        )
