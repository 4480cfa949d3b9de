# Copyright 2026 The drivemt Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the drivemt steering-model test harness."""

from ._drivemt import (
    ConfigError,
    DataError,
    Error,
    ModelError,
    SteeringModel,
    Translator,
    apply_transform,
    inconsistency_count,
    model,
    run_cli,
    sweep_bounds,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "ModelError",
    "SteeringModel",
    "Translator",
    "apply_transform",
    "inconsistency_count",
    "model",
    "run_cli",
    "sweep_bounds",
]
