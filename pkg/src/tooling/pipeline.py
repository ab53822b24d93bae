# Path: /src/tooling/pipeline.py
# Pipeline orchestration: purify -> train -> synthesize -> REM -> close -> weights
# -> detect -> eval, persisting every intermediate artifact of a run.
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from src import __version__
from src.aean.model import build_aean
from src.aean.persistence import save_model
from src.aean.synthesis import synthesize_hsi
from src.aean.trainer import TrainResult, resolve_config, train_aean
from src.detect.combine import combine_scores
from src.detect.local import local_scores
from src.detect.registry import COMBINED_BASE, COMBINED_DETECTOR, COMBINED_DIMS, DETECTORS, DetectorSpec, \
    expand_detectors, required_dims
from src.detect.rx import RIDGE_SCALE, weighted_stats, wrx_scores
from src.evaluation.roc import RocCurve, append_result, detection_map, read_results, roc_curve, save_roc
from src.hsi.cube import HsiCube, Raster, normalize_cube
from src.hsi.io import load_cube, load_raster, save_cube, save_raster
from src.purify.background import BackgroundMask, global_stats, mahalanobis_scores, threshold_by_confidence
from src.purify.training_set import extract_block_set, extract_spectral_set, save_training_set
from src.rem.error_map import Rem, WeightMap, compute_rem, smooth_rem, weights_from_rem, weights_from_scores
from src.tooling.config import PipelineConfig
from src.tooling.utils import save_configuration

logger = logging.getLogger(__name__)

STAGES = ("synth", "load", "purify", "train", "reconstruct", "rem", "detect", "eval")
MANIFEST_NAME = "manifest.json"
RESULTS_NAME = "results.csv"
TIMINGS_NAME = "timings.json"


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.message = f"Stage '{stage}' failed: {cause}"
        super().__init__(self.message)


@dataclass
class PipelineResult:
    directory: str
    image: str
    seed: int
    mask: Optional[BackgroundMask] = None
    training: Dict[int, TrainResult] = field(default_factory=dict)
    rems: Dict[int, Rem] = field(default_factory=dict)
    scores: Dict[str, Raster] = field(default_factory=dict)
    detector_settings: Dict[str, dict] = field(default_factory=dict)
    detector_seconds: Dict[str, float] = field(default_factory=dict)
    rocs: Dict[str, RocCurve] = field(default_factory=dict)
    detection_maps: Dict[str, Raster] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def aucs(self) -> Dict[str, float]:
        return {name: curve.auc for name, curve in self.rocs.items()}

    def artifact(self, name) -> str:
        return os.path.join(self.directory, name)


@contextmanager
def stage(name: str, timings: Optional[Dict[str, float]] = None):
    """Time a stage and re-raise any failure as a StageError naming it."""
    started = time.perf_counter()
    logger.info("Stage %s started", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error("Stage %s failed: %s", name, e)
        raise StageError(name, e) from e
    elapsed = time.perf_counter() - started
    if timings is not None:
        timings[name] = round(elapsed, 3)
    logger.info("Stage %s finished in %.2f s", name, elapsed)


def load_scene(config: PipelineConfig) -> Tuple[HsiCube, Optional[Raster]]:
    if not config.cube:
        raise ValueError("No input cube configured")
    cube = load_cube(config.cube, config.cube_format)
    reference = load_raster(config.reference, config.reference_format) if config.reference else None
    if reference is not None and not reference.matches(cube):
        raise ValueError(f"Reference {reference} does not match {cube}")
    return cube, reference


def purify_stage(cube: HsiCube, config: PipelineConfig, directory: str) -> BackgroundMask:
    stats = global_stats(cube, config.purify_ridge)
    scores = mahalanobis_scores(cube, stats)
    save_raster(scores, os.path.join(directory, "md.f32"))
    mask = replace(threshold_by_confidence(scores, config.confidence), ridge=stats.ridge)
    save_raster(mask.mask, os.path.join(directory, "mask.pgm"), fmt="pgm")
    return mask


def train_stage(cube: HsiCube, mask: BackgroundMask, dims: Iterable[int], config: PipelineConfig,
                directory: str) -> Dict[int, TrainResult]:
    results = {}
    for dim in dims:
        if dim == 1:
            training_set = extract_spectral_set(cube, mask)
        else:
            training_set = extract_block_set(cube, mask, dim, config.block_size, config.step)
        save_training_set(training_set, os.path.join(directory, f"train-{dim}d.hsts"))
        model = build_aean(dim, cube.bands, config.block_size if dim != 1 else None, lam=config.lam,
                           seed=config.seed)
        train_config = resolve_config(dim, epochs=config.epochs, batch_size=config.batch_size, seed=config.seed,
                                      lam=config.lam, lr_autoencoder=config.lr_autoencoder,
                                      lr_discriminator=config.lr_discriminator)
        result = train_aean(model, training_set, train_config)
        save_model(result.model, os.path.join(directory, f"model-{dim}d.aean"))
        result.save_trace(os.path.join(directory, f"trace-{dim}d.csv"))
        results[dim] = result
    return results


def rem_stage(cube: HsiCube, reconstructions: Dict[int, HsiCube], config: PipelineConfig,
              directory: str) -> Dict[int, Rem]:
    rems = {}
    for dim, reconstruction in reconstructions.items():
        rem = smooth_rem(compute_rem(cube, reconstruction), config.se_size)
        save_raster(rem.raw, os.path.join(directory, f"rem-{dim}d.f32"))
        save_raster(rem.final, os.path.join(directory, f"rem-closed-{dim}d.f32"))
        rems[dim] = rem
    return rems


class DetectorRunner:
    """Computes detector score maps for one cube, caching shared intermediates.

    ``settings`` holds, per computed detector, the tunables it ran with after
    defaults were resolved: the global ridge actually added, the local window
    and ridge rule, the weight floor, the closing size and the comb weights.
    """

    def __init__(self, cube: HsiCube, rems: Dict[int, Rem], config: PipelineConfig):
        self.cube = cube
        self.rems = rems
        self.config = config
        self.settings: Dict[str, dict] = {}
        self._cache: Dict[str, Raster] = {}
        self._rx_weights: Optional[WeightMap] = None
        self._rem_weight_maps: Dict[int, WeightMap] = {}

    def _rem(self, dim) -> Rem:
        if dim not in self.rems:
            raise ValueError(f"No REM available for {dim}D-AEAN")
        return self.rems[dim]

    def _classical_weights(self) -> WeightMap:
        if self._rx_weights is None:
            self._rx_weights = weights_from_scores(self.score(DetectorSpec("rx")))
        return self._rx_weights

    def _rem_weights(self, dim) -> WeightMap:
        if dim not in self._rem_weight_maps:
            self._rem_weight_maps[dim] = weights_from_rem(self._rem(dim).final)
        return self._rem_weight_maps[dim]

    def _weights(self, spec: DetectorSpec) -> Optional[WeightMap]:
        if spec.uses_aean:
            return self._rem_weights(spec.dim)
        if spec.base in ("wrx", "wlrx"):
            return self._classical_weights()
        return None

    def _compute(self, spec: DetectorSpec) -> Raster:
        cube, config = self.cube, self.config
        if spec.base not in DETECTORS:
            raise ValueError(f"Unknown detector {spec}")
        if spec.base == COMBINED_DETECTOR:
            maps = [self.score(DetectorSpec(COMBINED_BASE, dim)) for dim in COMBINED_DIMS]
            self.settings[spec.name] = {"weights": list(config.comb_weights)}
            return combine_scores(maps, config.comb_weights)
        if spec.base == "aean-rem":
            self.settings[spec.name] = {"se_size": self._rem(spec.dim).se_size}
            return self._rem(spec.dim).final

        settings = {}
        if spec.uses_aean:
            settings["se_size"] = self._rem(spec.dim).se_size
        weights = self._weights(spec)
        if weights is not None:
            settings["weight_floor"] = weights.floor
        if spec.local:
            # a None ridge is resolved per window as ridge_scale * trace / L
            settings.update(inner=config.inner, outer=config.outer, ridge=config.ridge)
            if config.ridge is None:
                settings["ridge_scale"] = RIDGE_SCALE
            scores = local_scores(cube, weights, config.window, config.ridge)
        else:
            stats = weighted_stats(cube, weights, config.ridge)
            settings["ridge"] = stats.ridge
            scores = wrx_scores(cube, stats)
        self.settings[spec.name] = settings
        return scores

    def score(self, spec: DetectorSpec) -> Raster:
        if spec.name not in self._cache:
            self._cache[spec.name] = self._compute(spec)
        return self._cache[spec.name]


def _manifest(config: PipelineConfig, result: PipelineResult, status: str, failed_stage=None) -> dict:
    return {
        "version": __version__,
        "image": result.image,
        "seed": result.seed,
        "status": status,
        "failed_stage": failed_stage,
        "config": config.to_dict(),
        "training": {f"{dim}d": {"steps": train.steps,
                                 "config": train.config.to_dict() if train.config is not None else None,
                                 "final_reconstruction_loss": train.trace[-1].reconstruction if train.trace else None,
                                 "infer_reconstruction_error": train.infer_error,
                                 "parameters": {name: network.parameter_count()
                                                for name, network in train.model.networks().items()}}
                     for dim, train in result.training.items()},
        "purification": None if result.mask is None else {
            "confidence": result.mask.confidence, "ridge": result.mask.ridge,
            "threshold": result.mask.threshold, "anomalies": result.mask.n_anomalies},
        "detectors": result.detector_settings,
        "auc": result.aucs,
    }


def _timings(result: PipelineResult) -> dict:
    return {
        "stages": result.timings,
        "training": {f"{dim}d": round(train.seconds, 3) for dim, train in result.training.items()},
        "detectors": {name: round(seconds, 3) for name, seconds in result.detector_seconds.items()},
    }


def run_pipeline(config: PipelineConfig, scene: Optional[Tuple[HsiCube, Optional[Raster]]] = None,
                 results_path: Optional[str] = None) -> PipelineResult:
    """Run every stage for one seed into ``config.output``.

    ``scene`` replaces loading the configured cube and reference. AUC rows go to
    ``results_path`` (``<output>/results.csv`` by default). The manifest is
    written even when a stage fails, and artifacts already produced are kept.
    Wall-clock times go to ``timings.json`` only, so every other artifact is
    identical across reruns of the same configuration and seed.
    """
    directory = config.output
    os.makedirs(directory, exist_ok=True)
    result = PipelineResult(directory=directory, image=config.name, seed=config.seed)
    detectors = expand_detectors(config.detectors, config.dims)
    dims = required_dims(detectors)
    results_path = results_path or os.path.join(directory, RESULTS_NAME)
    timings = result.timings
    status, failed = "failed", None
    try:
        with stage("load", timings):
            cube, reference = scene if scene is not None else load_scene(config)
            if config.normalize:
                cube = normalize_cube(cube)
        with stage("purify", timings):
            result.mask = purify_stage(cube, config, directory)
        reconstructions = {}
        if dims:
            with stage("train", timings):
                result.training = train_stage(cube, result.mask, dims, config, directory)
            with stage("reconstruct", timings):
                for dim, train in result.training.items():
                    reconstructions[dim] = synthesize_hsi(train.model, cube)
                    save_cube(reconstructions[dim], os.path.join(directory, f"recon-{dim}d.hdr"))
            with stage("rem", timings):
                result.rems = rem_stage(cube, reconstructions, config, directory)
        with stage("detect", timings):
            runner = DetectorRunner(cube, result.rems, config)
            result.detector_settings = runner.settings
            for spec in detectors:
                started = time.perf_counter()
                scores = runner.score(spec)
                result.detector_seconds[spec.name] = time.perf_counter() - started
                result.scores[spec.name] = scores
                save_raster(scores, os.path.join(directory, f"scores-{spec.name}.f32"))
        if reference is not None:
            with stage("eval", timings):
                for name, scores in result.scores.items():
                    curve = roc_curve(scores, reference)
                    result.rocs[name] = curve
                    save_roc(curve, os.path.join(directory, f"roc-{name}.csv"))
                    result.detection_maps[name] = detection_map(scores, reference, config.far)
                    save_raster(result.detection_maps[name], os.path.join(directory, f"detection-{name}.pgm"),
                                fmt="pgm")
                    append_result(results_path, result.image, name, config.seed, curve.auc)
                    logger.info("%s on %s (seed %d): AUC %.4f", name, result.image, config.seed, curve.auc)
        else:
            logger.warning("No reference map for %s, skipping evaluation", result.image)
        status = "ok"
    except StageError as e:
        failed = e.stage
        raise
    finally:
        save_configuration(os.path.join(directory, MANIFEST_NAME), _manifest(config, result, status, failed))
        save_configuration(os.path.join(directory, TIMINGS_NAME), _timings(result))
    return result


def run_sweep(config: PipelineConfig, seeds: List[int],
              scene: Optional[Tuple[HsiCube, Optional[Raster]]] = None) -> Dict[int, PipelineResult]:
    """Run the pipeline once per seed into ``<output>/seed-<s>/`` and add mean AUC rows.

    Mean detector times over the seeds go to ``<output>/timings.json``.
    """
    results_path = os.path.join(config.output, RESULTS_NAME)
    os.makedirs(config.output, exist_ok=True)
    runs = {}
    for seed in seeds:
        seed_config = replace(config, seed=seed, output=os.path.join(config.output, f"seed-{seed}"))
        runs[seed] = run_pipeline(seed_config, scene, results_path)

    rows = [row for row in read_results(results_path)
            if row["image"] == config.name and row["seed"] in {str(seed) for seed in seeds}]
    for detector in sorted({row["detector"] for row in rows}):
        aucs = [float(row["auc"]) for row in rows if row["detector"] == detector]
        append_result(results_path, config.name, detector, "mean", float(np.mean(aucs)))
        logger.info("%s on %s: mean AUC %.4f over %d seeds", detector, config.name, np.mean(aucs), len(aucs))

    detectors = sorted({name for run in runs.values() for name in run.detector_seconds})
    mean_seconds = {name: round(float(np.mean([run.detector_seconds[name] for run in runs.values()
                                                 if name in run.detector_seconds])), 3)
                    for name in detectors}
    save_configuration(os.path.join(config.output, TIMINGS_NAME), {"seeds": list(seeds), "detectors": mean_seconds})
    return runs
