# Path: /src/tooling/__init__.py
from src.tooling.config import PipelineConfig, load_pipeline_config, save_pipeline_config
from src.tooling.pipeline import STAGES, PipelineResult, StageError, run_pipeline, run_sweep
from src.tooling.synthetic import SynthSpec, generate_synthetic_hsi
from src.tooling.utils import ConfigurationError, load_configuration, save_configuration
