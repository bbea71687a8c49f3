"""Command-line entry points.

Every command writes a run manifest next to its outputs: the command
line, the config snapshot, input fingerprints, seeds, versions, and
wall-clock timings — enough to re-run bit-identically.  Primary outputs
(checkpoints, BVH, metric reports) are byte-deterministic for fixed
seeds; manifests carry timings and are not.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from . import __version__
from .bvh import load_bvh, save_bvh
from .checkpoint import Checkpoint
from .config import TrainConfig
from .ik import foot_ik_cleanup
from .metrics import evaluate_model, evaluate_samples, default_epsilon
from .motion import Motion
from .synthesis import generate, keyframe_edit, style_transfer
from .training import train, train_conditional


def _file_fingerprint(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_dir, command, args_dict, inputs, outputs, seeds, t0):
    manifest = {
        "tool": "monomotion",
        "version": __version__,
        "command": command,
        "arguments": {k: v for k, v in args_dict.items() if k != "func"},
        "inputs": {p: _file_fingerprint(p) for p in inputs},
        "outputs": outputs,
        "seeds": seeds,
        "wall_seconds": time.time() - t0,
    }
    _atomic_write(
        os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True)
    )


def _load_config(args):
    base = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = TrainConfig.from_dict(base)
    if getattr(args, "iterations", None) is not None:
        cfg.iterations_per_level = args.iterations
    if getattr(args, "levels", None) is not None:
        cfg.n_levels = args.levels
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "conditional", None):
        cfg.constrained_joints = list(args.conditional)
    return cfg


def _check_skeleton(checkpoint, skeleton):
    if checkpoint.skeleton.signature() != skeleton.signature():
        raise SystemExit("error: skeleton does not match the checkpoint's skeleton")


def _export(skeleton, motion, path, no_ik):
    if not no_ik and skeleton.foot_joints:
        motion = foot_ik_cleanup(skeleton, motion)
    save_bvh(path, skeleton, motion)


def cmd_train(args):
    t0 = time.time()
    cfg = _load_config(args)
    os.makedirs(args.out, exist_ok=True)
    skeleton = None
    motions = []
    for path in args.input:
        sk, motion = load_bvh(path)
        if skeleton is None:
            skeleton = sk
        elif sk.signature() != skeleton.signature():
            raise SystemExit("error: all training inputs must share one skeleton")
        motions.append(motion)

    telemetry_path = os.path.join(args.out, "telemetry.jsonl")
    outputs = {}
    with open(telemetry_path, "w", encoding="utf-8") as tele:

        def progress(record, phase="unconditional"):
            record = {"phase": phase, **record}
            tele.write(json.dumps(record, sort_keys=True) + "\n")
            tele.flush()

        base_cfg = TrainConfig.from_dict({**cfg.to_dict(), "conditional": False})
        base = train(base_cfg, skeleton, motions, progress=progress)
        if cfg.constrained_joints:
            base_path = os.path.join(args.out, "base.ckpt")
            base.save(base_path)
            outputs["base_checkpoint"] = base_path
            cond = train_conditional(
                cfg,
                skeleton,
                motions[0],
                base,
                progress=lambda r: progress(r, "conditional"),
            )
            final = cond
        else:
            final = base
    ckpt_path = os.path.join(args.out, "checkpoint.ckpt")
    final.save(ckpt_path)
    outputs["checkpoint"] = ckpt_path
    outputs["telemetry"] = telemetry_path
    _write_manifest(
        args.out, "train", vars(args), list(args.input), outputs, {"seed": cfg.seed}, t0
    )
    print(f"wrote {ckpt_path}")
    return 0


def cmd_generate(args):
    t0 = time.time()
    ck = Checkpoint.load(args.checkpoint)
    length = args.length or ck.training_length
    if args.reconstruction:
        motion = generate(ck, ck.training_length, seed=args.seed, use_zstar=True)
    else:
        motion = generate(ck, length, seed=args.seed)
    _export(ck.skeleton, motion, args.out, args.no_ik)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    _write_manifest(
        out_dir,
        "generate",
        vars(args),
        [args.checkpoint],
        {"bvh": args.out},
        {"seed": args.seed},
        t0,
    )
    print(f"wrote {args.out}")
    return 0


def cmd_style(args):
    t0 = time.time()
    ck = Checkpoint.load(args.style_checkpoint)
    skeleton, content = load_bvh(args.content)
    _check_skeleton(ck, skeleton)
    motion = style_transfer(ck, skeleton, content, seed=args.seed)
    _export(ck.skeleton, motion, args.out, args.no_ik)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    _write_manifest(
        out_dir,
        "style",
        vars(args),
        [args.style_checkpoint, args.content],
        {"bvh": args.out},
        {"seed": args.seed},
        t0,
    )
    print(f"wrote {args.out}")
    return 0


def cmd_keyframe(args):
    t0 = time.time()
    ck = Checkpoint.load(args.checkpoint)
    if not args.export_coarse and not args.coarse_edit:
        raise SystemExit("error: supply --coarse-edit and/or --export-coarse")
    if args.coarse_edit and not args.out:
        raise SystemExit("error: --out is required with --coarse-edit")
    if args.export_coarse:
        coarse = Motion(
            ck.coarse_levels[0], ck.skeleton.n_joints, ck.skeleton.n_contacts
        )
        save_bvh(args.export_coarse, ck.skeleton, coarse)
        print(f"wrote {args.export_coarse}")
        if not args.coarse_edit:
            return 0
    skeleton, coarse_edit = load_bvh(args.coarse_edit)
    _check_skeleton(ck, skeleton)
    # contact channels of a coarse BVH are re-extracted; keep the stored ones
    stored = ck.coarse_levels[0]
    if coarse_edit.n_frames == stored.shape[0]:
        coarse_edit.contacts[:] = Motion(
            stored, ck.skeleton.n_joints, ck.skeleton.n_contacts
        ).contacts
    motion = keyframe_edit(ck, coarse_edit, deterministic=not args.stochastic, seed=args.seed)
    _export(ck.skeleton, motion, args.out, args.no_ik)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    _write_manifest(
        out_dir,
        "keyframe",
        vars(args),
        [args.checkpoint, args.coarse_edit],
        {"bvh": args.out},
        {"seed": args.seed},
        t0,
    )
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args):
    t0 = time.time()
    ck = Checkpoint.load(args.checkpoint)
    skeleton, ref = load_bvh(args.ref)
    _check_skeleton(ck, skeleton)
    epsilon = args.epsilon if args.epsilon is not None else default_epsilon(skeleton.n_joints)
    if args.probe:
        probe_sk, probe = load_bvh(args.probe)
        _check_skeleton(ck, probe_sk)
        report = evaluate_samples([probe], ref, epsilon=epsilon, seed=args.seed)
    else:
        report = evaluate_model(
            ck,
            ref,
            n_samples=args.samples,
            epsilon=epsilon,
            length=args.length,
            seed=args.seed,
        )
    _atomic_write(args.out, report.to_json())
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    inputs = [args.checkpoint, args.ref] + ([args.probe] if args.probe else [])
    _write_manifest(
        out_dir, "eval", vars(args), inputs, {"report": args.out}, {"seed": args.seed}, t0
    )
    print(report.to_json())
    return 0


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    app = create_app(args.checkpoint)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monomotion",
        description="Train on a single motion clip and synthesize new motion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on one or more BVH clips")
    p.add_argument("--input", nargs="+", required=True, help="training BVH file(s)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--iterations", type=int, help="iterations per level")
    p.add_argument("--levels", type=int, help="pyramid levels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--conditional",
        nargs="+",
        metavar="JOINT",
        help="also train a conditional model on these constrained joints (e.g. root)",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="synthesize motion from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--length", type=int, help="output frames (default: training length)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output BVH path")
    p.add_argument("--no-ik", action="store_true", help="skip foot-contact IK cleanup")
    p.add_argument(
        "--reconstruction",
        action="store_true",
        help="use the anchor noises to reproduce the training clip",
    )
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("style", help="refine a content clip with a style model")
    p.add_argument("--style-checkpoint", required=True)
    p.add_argument("--content", required=True, help="content BVH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-ik", action="store_true")
    p.set_defaults(func=cmd_style)

    p = sub.add_parser("keyframe", help="re-synthesize from an edited coarse clip")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--coarse-edit", help="edited BVH at the coarsest rate")
    p.add_argument("--export-coarse", help="write the unedited coarse clip here")
    p.add_argument("--stochastic", action="store_true", help="fresh detail noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output BVH path")
    p.add_argument("--no-ik", action="store_true")
    p.set_defaults(func=cmd_keyframe)

    p = sub.add_parser("eval", help="coverage / diversity metrics against a reference")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ref", required=True, help="reference BVH (usually the training clip)")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--epsilon", type=float, help="coverage threshold (default 0.1 * joints)")
    p.add_argument("--length", type=int, help="generated sample length")
    p.add_argument("--probe", help="evaluate this BVH instead of generating samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve interactive generation over websockets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FloatingPointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
