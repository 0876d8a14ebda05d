"""Condition monitoring for wind turbine fleets from 10-minute SCADA data.

The package builds a fleet-median reference turbine, fits a seasonal
normal-behaviour model for a target sensor, watches the residuals with a
restarting CUSUM, and turns alarm timings into maintenance costs so that
scheduling policies can be compared in euros.

Core modules import only numpy/pydantic/yaml; the HTTP layer lives in
``windcm.service`` and is only pulled in by the CLI or an explicit import.
"""

__version__ = "0.1.0"

from windcm.config import PipelineConfig, load_config
from windcm.errors import WindcmError
from windcm.pipeline import Workspace

__all__ = ["PipelineConfig", "Workspace", "WindcmError", "__version__", "load_config"]
