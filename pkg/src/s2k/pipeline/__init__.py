from .config import PipelineConfig, validate_config  # noqa: F401
from .stages import run_all, run_stage, STAGE_ORDER  # noqa: F401
