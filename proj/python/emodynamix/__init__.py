# Copyright 2026 The EmoDynamiX Authors
# SPDX-License-Identifier: Apache-2.0
"""Dialogue-strategy prediction over heterogeneous emotion/strategy graphs."""

from ._core import (
    Error,
    Predictor,
    discourse_relations,
    emotion_labels,
    f1_scores,
    preference_bias,
    run,
)

__all__ = [
    "Error",
    "Predictor",
    "discourse_relations",
    "emotion_labels",
    "f1_scores",
    "preference_bias",
    "run",
]
