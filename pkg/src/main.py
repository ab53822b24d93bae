# Path: /src/main.py
# Description: Main entry point for the application
import argparse
import logging
import os
import sys
from dataclasses import fields

from src.loader import initialize_application
from src.tooling.config import PipelineConfig, load_pipeline_config
from src.tooling.pipeline import StageError, stage

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "config": 2,
    "synth": 10,
    "load": 11,
    "purify": 12,
    "train": 13,
    "reconstruct": 14,
    "rem": 15,
    "detect": 16,
    "eval": 17,
}


def _add_config_flags(parser, names=None):
    # One flag per PipelineConfig field, parsed the same way as the INI value
    for item in fields(PipelineConfig):
        if names is not None and item.name not in names:
            continue
        flag = "--" + item.name.replace("_", "-")
        parser.add_argument(flag, dest=item.name, type=item.metadata["parse"], default=None,
                            help=f"[{item.metadata['section']}] {item.name} (default: {item.default})")


def _build_config(args, names=None):
    config = load_pipeline_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {item.name: getattr(args, item.name, None) for item in fields(PipelineConfig)
                 if names is None or item.name in names}
    return config.with_overrides(**overrides)


def cmd_synth(args, config):
    from src.hsi.io import save_cube, save_raster
    from src.tooling.synthetic import SynthSpec, generate_synthetic_hsi

    with stage("synth"):
        spec = SynthSpec(height=args.height, width=args.width, bands=args.bands, classes=args.classes,
                         offset=args.offset, noise=args.noise, seed=args.seed)
        cube, reference = generate_synthetic_hsi(spec)
        os.makedirs(args.output, exist_ok=True)
        cube_path = os.path.join(args.output, "scene.hdr")
        reference_path = os.path.join(args.output, "reference.f32")
        save_cube(cube, cube_path)
        save_raster(reference, reference_path)
    print(f"Wrote {cube} to {cube_path} and reference to {reference_path}")


def _load_cube(config):
    from src.hsi.cube import normalize_cube
    from src.tooling.pipeline import load_scene

    with stage("load"):
        cube, reference = load_scene(config)
        if config.normalize:
            cube = normalize_cube(cube)
    return cube, reference


def cmd_purify(args, config):
    from src.tooling.pipeline import purify_stage

    cube, _ = _load_cube(config)
    os.makedirs(config.output, exist_ok=True)
    with stage("purify"):
        mask = purify_stage(cube, config, config.output)
    print(f"Purification flagged {mask.n_anomalies} of {cube.n_pixels} pixels (threshold {mask.threshold:.6g})")


def cmd_train(args, config):
    from src.hsi.io import load_raster
    from src.purify.background import BackgroundMask
    from src.tooling.pipeline import purify_stage, train_stage

    cube, _ = _load_cube(config)
    os.makedirs(config.output, exist_ok=True)
    with stage("purify"):
        if args.mask:
            mask = BackgroundMask(mask=load_raster(args.mask, fmt="pgm"), threshold=float("nan"),
                                  confidence=config.confidence)
        else:
            mask = purify_stage(cube, config, config.output)
    with stage("train"):
        results = train_stage(cube, mask, config.dims, config, config.output)
    for dim, result in results.items():
        final = result.trace[-1].reconstruction if result.trace else float("nan")
        print(f"{result.model}: {result.steps} steps in {result.seconds:.1f} s, final l_r {final:.6f}")


def cmd_reconstruct(args, config):
    from src.aean.persistence import load_model
    from src.aean.synthesis import synthesize_hsi
    from src.hsi.io import save_cube
    from src.tooling.pipeline import rem_stage

    cube, _ = _load_cube(config)
    os.makedirs(config.output, exist_ok=True)
    reconstructions = {}
    with stage("reconstruct"):
        for path in args.model:
            model = load_model(path)
            reconstructions[model.dim] = synthesize_hsi(model, cube)
            save_cube(reconstructions[model.dim], os.path.join(config.output, f"recon-{model.dim}d.hdr"))
    with stage("rem"):
        rems = rem_stage(cube, reconstructions, config, config.output)
    for dim, rem in rems.items():
        print(f"{dim}D REM: max {rem.raw.data.max():.6g}, closed with se={rem.se_size}")


def cmd_detect(args, config):
    from src.detect.registry import expand_detectors
    from src.hsi.io import load_raster, save_raster
    from src.rem.error_map import Rem
    from src.tooling.pipeline import DetectorRunner

    cube, _ = _load_cube(config)
    os.makedirs(config.output, exist_ok=True)
    with stage("detect"):
        rems = {}
        if args.run:
            for dim in (1, 2, 3):
                path = os.path.join(args.run, f"rem-closed-{dim}d.f32")
                if os.path.exists(path):
                    rems[dim] = Rem(raw=load_raster(path))
        runner = DetectorRunner(cube, rems, config)
        for spec in expand_detectors(config.detectors, config.dims):
            path = os.path.join(config.output, f"scores-{spec.name}.f32")
            save_raster(runner.score(spec), path)
            print(f"{spec.name}: scores written to {path}")


def cmd_eval(args, config):
    from src.evaluation.roc import append_result, detection_map, roc_curve, save_roc
    from src.hsi.io import load_raster, save_raster

    with stage("load"):
        scores = load_raster(args.scores)
        reference = load_raster(config.reference, config.reference_format)
    os.makedirs(config.output, exist_ok=True)
    with stage("eval"):
        curve = roc_curve(scores, reference)
        save_roc(curve, os.path.join(config.output, f"roc-{args.detector}.csv"))
        save_raster(detection_map(scores, reference, config.far),
                    os.path.join(config.output, f"detection-{args.detector}.pgm"), fmt="pgm")
        append_result(os.path.join(config.output, "results.csv"), config.name, args.detector, config.seed, curve.auc)
    print(f"{args.detector}: AUC {curve.auc:.6f}")


def cmd_pipeline(args, config):
    from src.tooling.pipeline import run_pipeline, run_sweep
    from src.tooling.utils import parse_seeds

    if args.seeds:
        runs = run_sweep(config, parse_seeds(args.seeds))
        for seed, result in runs.items():
            for name, auc in result.aucs.items():
                print(f"seed {seed} {name}: AUC {auc:.6f}")
    else:
        result = run_pipeline(config)
        for name, auc in result.aucs.items():
            print(f"{name}: AUC {auc:.6f}")


def cmd_serve(args, config):
    from src.ui.app import run as run_ui

    run_ui(args.runs, host=args.host, port=args.port, debug=args.debug)


def build_parser():
    parser = argparse.ArgumentParser(prog="hsi-aean",
                                     description="Hyperspectral anomaly detection with AEAN-weighted RX detectors")
    parser.add_argument("-d", "--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-file", help="Also write the log to this file")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Generate a synthetic scene with planted anomalies")
    synth.add_argument("--output", required=True)
    synth.add_argument("--height", type=int, default=48)
    synth.add_argument("--width", type=int, default=48)
    synth.add_argument("--bands", type=int, default=16)
    synth.add_argument("--classes", type=int, default=3)
    synth.add_argument("--offset", type=float, default=0.5)
    synth.add_argument("--noise", type=float, default=0.02)
    synth.add_argument("--seed", type=int, default=0)
    synth.set_defaults(handler=cmd_synth, config_fields=())

    input_fields = ("cube", "cube_format", "image_name", "normalize", "output")
    purify = commands.add_parser("purify", help="Score pixels and write the background mask")
    purify_fields = input_fields + ("confidence", "purify_ridge")
    purify.set_defaults(handler=cmd_purify, config_fields=purify_fields)

    train = commands.add_parser("train", help="Train AEAN models on the purified background")
    train.add_argument("--mask", help="Use this mask.pgm instead of purifying again")
    train_fields = purify_fields + ("dims", "block_size", "step", "lam", "epochs", "batch_size",
                                    "lr_autoencoder", "lr_discriminator", "seed")
    train.set_defaults(handler=cmd_train, config_fields=train_fields)

    reconstruct = commands.add_parser("reconstruct", help="Synthesize the image and write raw and closed REMs")
    reconstruct.add_argument("--model", action="append", required=True, help="model-<d>d.aean (repeatable)")
    reconstruct.set_defaults(handler=cmd_reconstruct, config_fields=input_fields + ("se_size",))

    detect = commands.add_parser("detect", help="Compute detector score maps")
    detect.add_argument("--run", help="Directory holding rem-closed-<d>d.f32 for AEAN detectors")
    detect.set_defaults(handler=cmd_detect, config_fields=input_fields + (
        "dims", "detectors", "inner", "outer", "ridge", "comb_weights"))

    evaluate = commands.add_parser("eval", help="ROC, AUC and detection map of a score raster")
    evaluate.add_argument("--scores", required=True)
    evaluate.add_argument("--detector", required=True)
    evaluate.set_defaults(handler=cmd_eval, config_fields=(
        "reference", "reference_format", "image_name", "far", "seed", "output", "cube"))

    pipeline = commands.add_parser("pipeline", help="Run every stage and evaluate")
    pipeline.add_argument("--seeds", help="Comma separated seeds; runs go to <output>/seed-<s>/")
    pipeline.set_defaults(handler=cmd_pipeline, config_fields=None)

    serve = commands.add_parser("serve", help="Browse pipeline runs over HTTP")
    serve.add_argument("--runs", default="runs")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=5000)
    serve.set_defaults(handler=cmd_serve, config_fields=())

    for command in (purify, train, reconstruct, detect, evaluate, pipeline):
        command.add_argument("--config", help="INI configuration file")
        _add_config_flags(command, command.get_default("config_fields"))
    return parser


def main(args):
    parser = build_parser()
    parsed_args = parser.parse_args(args)

    initialize_application(parsed_args.debug, parsed_args.log_file)

    try:
        names = parsed_args.config_fields
        config = _build_config(parsed_args, names) if names != () else PipelineConfig()
    except (ValueError, FileNotFoundError) as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CODES["config"]

    try:
        parsed_args.handler(parsed_args, config)
    except StageError as e:
        logger.error("%s", e.message)
        return EXIT_CODES.get(e.stage, 1)
    return 0


def entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
