"""Batch front door: train / render / eval over files.

Exit codes: 0 success, 1 usage error (bad flags, conflicting alpha flags),
2 runtime error (bad files, failed training, invalid values).
"""

from __future__ import annotations

import argparse
import json
import sys

from inrstyle import imaging
from inrstyle.evaluation import disentanglement_sweep
from inrstyle.latents import AlphaMap, GradientAlpha, RegionAlphas, UniformAlpha
from inrstyle.objective import LossConfig
from inrstyle.perceptual import load_extractor
from inrstyle.renderer import RenderRequest, render_rows
from inrstyle.session import load_session_file, save_session_file
from inrstyle.trainer import TrainConfig, history_jsonl, train

DEFAULT_EVAL_ALPHAS = "0,0.25,0.5,0.75,1"


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inrst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a session to one content/style pair")
    p_train.add_argument("--content", required=True)
    p_train.add_argument("--style", required=True)
    p_train.add_argument("--vgg", required=True, help="feature-extractor weight file")
    p_train.add_argument("--out", required=True, help="output session archive (.inrs)")
    p_train.add_argument("--size", type=int, default=256)
    p_train.add_argument("--iters", type=int, default=5000)
    p_train.add_argument("--kappa", type=float, default=2.0)
    p_train.add_argument("--style-weight", type=float, default=1e5)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--losses", default=None, help="write per-iteration losses (JSONL)")

    p_render = sub.add_parser("render", help="render a trained session")
    p_render.add_argument("--session", required=True)
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--alpha", type=float, default=None)
    p_render.add_argument("--alpha-map", default=None)
    p_render.add_argument("--region", action="append", default=None,
                          metavar="MASK.PNG:ALPHA")
    p_render.add_argument("--default-alpha", type=float, default=None)
    p_render.add_argument("--gradient", default=None, metavar="AXIS:START:STOP")
    p_render.add_argument("--width", type=int, default=None)
    p_render.add_argument("--height", type=int, default=None)
    p_render.add_argument("--chunk-rows", type=int, default=256)

    p_eval = sub.add_parser("eval", help="metric sweep for a trained session")
    p_eval.add_argument("--session", required=True)
    p_eval.add_argument("--content", required=True)
    p_eval.add_argument("--style", required=True)
    p_eval.add_argument("--vgg", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--alphas", default=DEFAULT_EVAL_ALPHAS)
    return parser


def _read_image(path: str) -> imaging.Image:
    with open(path, "rb") as fh:
        return imaging.decode(fh.read())


def _alpha_spec(args):
    present = []
    if args.alpha is not None:
        present.append("--alpha")
    if args.alpha_map is not None:
        present.append("--alpha-map")
    if args.region or args.default_alpha is not None:
        present.append("--region/--default-alpha")
    if args.gradient is not None:
        present.append("--gradient")
    if len(present) > 1:
        raise UsageError(f"conflicting alpha flags: {' and '.join(present)}")
    if not present:
        return UniformAlpha(0.5)

    kind = present[0]
    if kind == "--alpha":
        return UniformAlpha(args.alpha)
    if kind == "--alpha-map":
        return AlphaMap(_read_image(args.alpha_map))
    if kind == "--gradient":
        parts = args.gradient.split(":")
        if len(parts) != 3 or parts[0] not in ("x", "y"):
            raise UsageError(f"--gradient expects x|y:START:STOP, got {args.gradient!r}")
        try:
            return GradientAlpha(axis=parts[0], start=float(parts[1]), stop=float(parts[2]))
        except ValueError as exc:
            raise UsageError(f"--gradient: {exc}") from None

    regions = []
    for spec in args.region or []:
        path, sep, value = spec.rpartition(":")
        if not sep or not path:
            raise UsageError(f"--region expects MASK.PNG:ALPHA, got {spec!r}")
        try:
            alpha = float(value)
        except ValueError:
            raise UsageError(f"--region alpha {value!r} is not a number") from None
        regions.append((_read_image(path), alpha))
    default = 1.0 if args.default_alpha is None else args.default_alpha
    return RegionAlphas(regions=tuple(regions), default_alpha=default)


def _cmd_train(args) -> int:
    content = _read_image(args.content)
    style = _read_image(args.style)
    extractor = load_extractor(args.vgg)
    cfg = TrainConfig(
        iterations=args.iters,
        train_size=args.size,
        loss=LossConfig(lambda_style=args.style_weight, kappa=args.kappa),
        latent_seed=args.seed,
        param_seed=args.seed,
        alpha_seed=args.seed,
    )
    session = train(content, style, cfg, extractor)
    save_session_file(session, args.out)
    if args.losses:
        with open(args.losses, "w") as fh:
            fh.write(history_jsonl(session.loss_history))
    return 0


def _cmd_render(args) -> int:
    session = load_session_file(args.session)
    spec = _alpha_spec(args)
    req = RenderRequest(
        height=args.height if args.height is not None else session.train_height,
        width=args.width if args.width is not None else session.train_width,
        alpha=spec,
        chunk_rows=args.chunk_rows,
    )
    # stream rows straight into the PNG so output size never dictates memory
    with open(args.out, "wb") as fh:
        imaging.write_png_rows(fh, req.width, req.height,
                               (band for _, band in render_rows(session, req)))
    return 0


def _cmd_eval(args) -> int:
    session = load_session_file(args.session)
    content = _read_image(args.content)
    style = _read_image(args.style)
    extractor = load_extractor(args.vgg)
    try:
        alphas = [float(v) for v in args.alphas.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"--alphas expects comma-separated numbers, got {args.alphas!r}") from None
    if not alphas:
        raise UsageError("--alphas must name at least one value")
    report = disentanglement_sweep(session, content, style, alphas, extractor)
    with open(args.out, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "render":
            return _cmd_render(args)
        return _cmd_eval(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and set exit code
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
