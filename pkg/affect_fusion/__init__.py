"""
Decision-level fusion of per-cue affect classifier outputs (facial, speech, eye, posture)
into one of five emotions per student and time window.

See the README files for an overview.
"""

from .taxonomy import CueKind, CueLabel, EmotionLabel, Observation
from .mapping import MappingTable, default_mapping, map_cue_output, validate_mapping
from .fusion import (
  EmotionScores, FusionConfig, MissingCuePolicy, accumulate_scores, decide, default_config, fuse_distributions, rank)
from .sessions import WindowSpec, StreamingFuser, classroom_rollup, fuse_log, window_stream
from .metrics import ConfusionMatrix, merge, summarize
