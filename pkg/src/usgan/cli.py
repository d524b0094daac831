"""Command line entry point: one binary, five subcommands.

Exit codes follow the usual convention: 0 on success, 1 on runtime errors
(missing files, failed checkpoints), 2 on usage or config errors. The
USGAN_LOG environment variable (error, info or debug) controls verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config, override

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("USGAN_LOG", "error").lower()
    level = _LOG_LEVELS.get(name, logging.ERROR)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _parse_alphas(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--alphas must be comma-separated numbers, "
                          f"got {text!r}")
    if not values:
        raise ConfigError("--alphas lists no values")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"alpha {v} outside [0, 1]")
    return values


def _cmd_make_dataset(args) -> int:
    from .phantom import build_dataset

    section = override(load_config(args.config).dataset, seed=args.seed)
    manifest = build_dataset(args.out, n_train=section.n_train,
                             n_eval=section.n_eval,
                             spec_template=section.spec_template(),
                             slices_per_volume=section.slices_per_volume)
    del manifest
    print(Path(args.out) / "manifest.json")
    return 0


def _cmd_train(args) -> int:
    from .training import run_training

    cfg = load_config(args.config)
    train_cfg = override(cfg.train, seed=args.seed)
    final = run_training(args.data, train_cfg, args.out,
                         gen_config=cfg.model.generator_config(),
                         disc_config=cfg.model.discriminator_config(),
                         resume_from=args.resume)
    print(final)
    return 0


def _cmd_enhance(args) -> int:
    from .imaging import load_png, save_png
    from .inference import Enhancer

    if (args.alpha is None) == (args.mask is None):
        print("error: provide exactly one of --alpha and --mask",
              file=sys.stderr)
        return 2
    if args.alpha is not None and not 0.0 <= args.alpha <= 1.0:
        print(f"error: --alpha must lie in [0, 1], got {args.alpha}",
              file=sys.stderr)
        return 2

    enhancer = Enhancer.from_checkpoint(args.checkpoint)
    image = load_png(args.input)
    if args.alpha is not None:
        out = enhancer.enhance_array(image, alpha=args.alpha)
    else:
        from .adain import load_alpha_field
        out = enhancer.enhance_array(image,
                                     alpha_field=load_alpha_field(args.mask))
    save_png(args.out, out)
    print(args.out)
    return 0


def _cmd_eval(args) -> int:
    from .evalmetrics import evaluate_pairs, report_to_csv, report_to_json
    from .inference import Enhancer
    from .phantom import DatasetManifest

    alphas = _parse_alphas(args.alphas)
    enhancer = Enhancer.from_checkpoint(args.checkpoint)
    manifest = DatasetManifest.load(args.data)
    rows = evaluate_pairs(enhancer, args.data, manifest.eval_pairs, alphas)
    if args.json is not None:
        report_to_json(rows, args.json)
    if args.out is not None:
        report_to_csv(rows, args.out)
        print(args.out)
    else:
        report_to_csv(rows, sys.stdout)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    section = override(load_config(args.config).serve, host=args.host,
                       port=args.port, checkpoint=args.checkpoint)
    app = create_app(section.checkpoint)
    logger.info("serving on %s:%d", section.host, section.port)
    uvicorn.run(app, host=section.host, port=section.port, log_level="error")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usgan",
        description="Train, run and serve the switchable enhancement model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset",
                       help="synthesize an unpaired training corpus")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, help="override dataset seed")
    p.set_defaults(handler=_cmd_make_dataset)

    p = sub.add_parser("train", help="train on a synthesized dataset")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--seed", type=int, help="override training seed")
    p.add_argument("--resume", help="checkpoint directory to resume from")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("enhance", help="enhance one PNG image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="input", required=True, help="input PNG")
    p.add_argument("--alpha", type=float, help="global strength in [0, 1]")
    p.add_argument("--mask", help="alpha-field PNG (with its .json sidecar)")
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(handler=_cmd_enhance)

    p = sub.add_parser("eval", help="score held-out pairs over an alpha grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1",
                   help="comma-separated alpha values")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--json", help="also write a JSON report here")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--checkpoint", help="checkpoint directory to load")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(handler=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as err:
        logger.debug("command failed", exc_info=True)
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
