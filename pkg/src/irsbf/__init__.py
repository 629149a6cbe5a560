"""Joint active/passive beamforming for distributed-IRS multi-user mmWave downlinks."""
from .config import SystemConfig, load_config
from .engine import SolveOptions, SolveTrace, run_baseline, run_wsm

__all__ = ["SystemConfig", "load_config", "SolveOptions", "SolveTrace", "run_wsm",
           "run_baseline"]
__version__ = "0.1.0"
