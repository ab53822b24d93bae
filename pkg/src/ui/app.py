# Path: src/ui/app.py
# Description: Read-only results browser. Serves the manifests, ROC curves and raster
# artifacts of pipeline runs found under a runs directory as a small JSON API.
import logging
import os

from flask import Flask, abort, current_app, jsonify, send_file
from werkzeug.security import safe_join

from src.evaluation.roc import load_roc, read_results
from src.tooling.pipeline import MANIFEST_NAME, RESULTS_NAME
from src.tooling.utils import ConfigurationError, load_configuration

logger = logging.getLogger(__name__)

app = Flask(__name__)
app.config.setdefault("RUNS_DIR", "runs")


def _runs_dir():
    return os.path.abspath(current_app.config["RUNS_DIR"])


def _run_dir(name):
    directory = safe_join(_runs_dir(), name)
    if directory is None or not os.path.isfile(os.path.join(directory, MANIFEST_NAME)):
        abort(404, description=f"Unknown run '{name}'")
    return directory


def list_runs(root):
    """Relative names of every directory under ``root`` holding a manifest."""
    runs = []
    for directory, _, files in os.walk(root):
        if MANIFEST_NAME in files:
            runs.append(os.path.relpath(directory, root).replace(os.sep, "/"))
    return sorted(runs)


@app.route('/api/runs', methods=['GET'])
def api_runs():
    root = _runs_dir()
    if not os.path.isdir(root):
        return jsonify({"runs": []}), 200
    runs = []
    for name in list_runs(root):
        try:
            manifest = load_configuration(os.path.join(root, name, MANIFEST_NAME))
        except ConfigurationError as e:
            logger.warning("Skipping run %s: %s", name, e.message)
            continue
        runs.append({
            "name": name,
            "image": manifest.get("image"),
            "seed": manifest.get("seed"),
            "status": manifest.get("status"),
            "auc": manifest.get("auc", {}),
            "results": read_results(os.path.join(root, name, RESULTS_NAME)),
        })
    return jsonify({"runs": runs}), 200


@app.route('/api/runs/<path:name>', methods=['GET'])
def api_run(name):
    try:
        manifest = load_configuration(os.path.join(_run_dir(name), MANIFEST_NAME))
    except ConfigurationError as e:
        abort(400, description=f"Unreadable manifest. Reason: {e.message}")
    return jsonify(manifest), 200


@app.route('/api/runs/<path:name>/roc/<detector>', methods=['GET'])
def api_roc(name, detector):
    path = safe_join(_run_dir(name), f"roc-{detector}.csv")
    if path is None or not os.path.isfile(path):
        abort(404, description=f"No ROC curve for detector '{detector}' in run '{name}'")
    try:
        curve = load_roc(path)
    except (ValueError, KeyError) as e:
        abort(400, description=f"Unreadable ROC file. Reason: {str(e)}")
    return jsonify({"detector": detector, "auc": curve.auc, "points": curve.points}), 200


@app.route('/api/runs/<path:name>/maps/<filename>', methods=['GET'])
def api_map(name, filename):
    path = safe_join(_run_dir(name), filename)
    if path is None or not os.path.isfile(path):
        abort(404, description=f"No artifact '{filename}' in run '{name}'")
    return send_file(path, mimetype="application/octet-stream")


@app.errorhandler(400)
def handle_bad_request(e):
    return jsonify({"error": e.description}), 400


@app.errorhandler(404)
def handle_not_found(e):
    return jsonify({"error": e.description}), 404


@app.errorhandler(500)
def handle_internal_error(e):
    return jsonify({"error": "Internal Server Error"}), 500


def run(runs_dir="runs", host="127.0.0.1", port=5000, debug=False):
    app.config["RUNS_DIR"] = runs_dir
    logger.info("Serving runs from %s on http://%s:%d", os.path.abspath(runs_dir), host, port)
    app.run(debug=debug, host=host, port=port)
