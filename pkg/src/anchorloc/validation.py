"""Input checks for data entering the estimator."""
from __future__ import annotations

import numpy as np

from .exceptions import SchemaError
from .scenario import SCHEMA_VERSION, MeasurementLog


def check_frame(frame):
    rx = np.asarray(frame.rx)
    if rx.ndim != 2 or rx.shape[0] != 2:
        raise ValueError(f"frame {frame.frame_index}: expected 2 RX channels, got shape {rx.shape}")
    if not np.all(np.isfinite(rx)):
        raise ValueError(f"frame {frame.frame_index}: non-finite samples")
    return frame


def check_log(log):
    """Verify a log's type and schema version; returns it unchanged."""
    if not isinstance(log, MeasurementLog):
        raise TypeError(f"expected a MeasurementLog, got {type(log).__name__}")
    version = log.header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"log schema_version {version!r} != supported {SCHEMA_VERSION}")
    return log
