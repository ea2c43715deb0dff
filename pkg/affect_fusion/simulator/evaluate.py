
"""
Score fused decisions and single-cue baselines of a simulated session against its ground truth.
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple
from ..fusion import FusionConfig, Skip, accumulate_scores, decide, majority_config
from ..log import print_log
from ..mapping import MappingTable
from ..metrics import ConfusionMatrix, summarize
from ..sessions import WindowSpec, fuse_log, representative_per_cue, window_stream
from ..taxonomy import CueKind, Cues, EmotionLabel, Emotions
from .session import SimulatedSession


@dataclass(frozen=True)
class EvaluationReport:
  """
  :param per_cue: each cue alone
  :param fused: the full fusion pipeline
  :param majority: unweighted majority voting, if requested
  :param no_evidence: per matrix name, the number of (student, tick) samples without any evidence.
    These are scored with the first emotion of the tie-break order.
  """
  per_cue: Mapping[CueKind, ConfusionMatrix]
  fused: ConfusionMatrix
  majority: Optional[ConfusionMatrix]
  no_evidence: Mapping[str, int]

  def matrices(self) -> List[Tuple[str, ConfusionMatrix]]:
    """
    :return: (name, matrix), cues in cue order, then fused, then majority if present
    """
    res = [(cue.value, self.per_cue[cue]) for cue in Cues]
    res.append(("fused", self.fused))
    if self.majority is not None:
      res.append(("majority", self.majority))
    return res

  def accuracy(self, name: str) -> float:
    m = dict(self.matrices())[name]
    return m.trace / m.total

  def to_json_dict(self) -> Dict[str, Any]:
    return {
      name: {
        "confusion_matrix": m.to_json_dict(),
        "summary": summarize(m).to_json_dict(),
        "no_evidence": self.no_evidence[name],
      }
      for name, m in self.matrices()}

  def render_text(self) -> str:
    parts = []
    for name, m in self.matrices():
      parts.append(m.render_text(title=f"== {name} (no evidence: {self.no_evidence[name]})"))
      parts.append(summarize(m).render_text())
    return "\n".join(parts)


def _fused_matrix(session: SimulatedSession, config: FusionConfig, table: MappingTable,
                  fallback: EmotionLabel) -> Tuple[ConfusionMatrix, int]:
  spec = WindowSpec(session.step_ms, session.step_ms)
  decided = {}  # type: Dict[Tuple[str, int], Optional[EmotionLabel]]
  for timeline in fuse_log(session.observations, spec, config, table):
    for entry in timeline.entries:
      decided[(timeline.student_id, entry.window_start)] = entry.emotion
  m = ConfusionMatrix.zeros(Emotions)
  no_evidence = 0
  for student in session.student_ids:
    for tick, actual in enumerate(session.ground_truth[student]):
      predicted = decided.get((student, session.window_start(tick)))
      if predicted is None:
        no_evidence += 1
        predicted = fallback
      m.record(predicted, actual)
  return m, no_evidence


def _single_cue_matrices(session: SimulatedSession, config: FusionConfig, table: MappingTable,
                         fallback: EmotionLabel) -> Tuple[Dict[CueKind, ConfusionMatrix], Dict[CueKind, int]]:
  config = config.with_policy(Skip)
  spec = WindowSpec(session.step_ms, session.step_ms)
  representatives = {}  # type: Dict[Tuple[str, int], Dict[CueKind, Any]]
  for student, windows in window_stream(session.observations, spec).items():
    for start, obs in windows:
      representatives[(student, start)] = representative_per_cue(obs)
  matrices = {cue: ConfusionMatrix.zeros(Emotions) for cue in Cues}
  no_evidence = {cue: 0 for cue in Cues}
  for student in session.student_ids:
    for tick, actual in enumerate(session.ground_truth[student]):
      outputs = representatives.get((student, session.window_start(tick)), {})
      for cue in Cues:
        if cue in outputs:
          predicted = decide(accumulate_scores({cue: outputs[cue]}, config, table), config.tie_break)
        else:
          no_evidence[cue] += 1
          predicted = fallback
        matrices[cue].record(predicted, actual)
  return matrices, no_evidence


def majority_variant(config: FusionConfig) -> FusionConfig:
  """
  :func:`majority_config`, but with the tie-break and missing-cue policy of config.
  """
  return replace(majority_config(), tie_break=config.tie_break, missing_cue_policy=config.missing_cue_policy)


def evaluate(session: SimulatedSession, config: FusionConfig, table: MappingTable, *,
             majority_baseline: bool = False) -> EvaluationReport:
  """
  One tick is one tumbling fusion window.
  A cue-alone baseline decides from that cue's representative label only, with that cue's weight.
  """
  fallback = config.tie_break[0]
  per_cue, no_evidence = _single_cue_matrices(session, config, table, fallback)
  counts = {cue.value: n for cue, n in no_evidence.items()}
  fused, counts["fused"] = _fused_matrix(session, config, table, fallback)
  majority = None
  if majority_baseline:
    majority, counts["majority"] = _fused_matrix(session, majority_variant(config), table, fallback)
  report = EvaluationReport(per_cue=per_cue, fused=fused, majority=majority, no_evidence=counts)
  for name, m in report.matrices():
    print_log(2, f"evaluate: {name} accuracy {m.trace / m.total:.4f}, no evidence {counts[name]}")
  return report
