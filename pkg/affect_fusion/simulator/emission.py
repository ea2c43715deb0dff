
"""
Noisy channel from the true emotion to the label a cue classifier outputs.

Per cue, either an accuracy ``a`` or an explicit emission matrix, and a dropout probability ``d``.

With an accuracy, emission inverts the mapping table:
the candidate labels C are the labels of the cue whose mapped set contains the true emotion.
With probability ``a`` we pick uniformly from C, otherwise uniformly from the other labels.
If C is empty, we pick uniformly from the whole space.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional
import math
import numpy
from ..errors import ConfigError, Finding, UnknownLabel
from ..log import unique_print
from ..mapping import MappingTable, candidate_labels
from ..taxonomy import CueKind, Cues, EmotionLabel, Emotions, Observation, label_names, label_space, parse_cue
from .rng import XorShift64Star


@dataclass(frozen=True)
class EmissionModel:
  """
  :param accuracy: per cue, probability of emitting a label consistent with the true emotion
  :param dropout: per cue, probability that the cue gives no observation at all
  :param emission_matrices: optional per cue (5, num labels) matrix, row = true emotion,
    row-stochastic. Takes precedence over the accuracy of that cue.
  """
  accuracy: Mapping[CueKind, float]
  dropout: Mapping[CueKind, float]
  emission_matrices: Mapping[CueKind, numpy.ndarray] = field(default_factory=dict)

  def __post_init__(self):
    object.__setattr__(self, "accuracy", MappingProxyType(dict(self.accuracy)))
    object.__setattr__(self, "dropout", MappingProxyType(dict(self.dropout)))
    matrices = {}
    for cue, m in self.emission_matrices.items():
      m = numpy.array(m, dtype="float64")
      m.flags.writeable = False
      matrices[cue] = m
    object.__setattr__(self, "emission_matrices", MappingProxyType(matrices))

  def __eq__(self, other):
    if not isinstance(other, EmissionModel):
      return NotImplemented
    return (
      dict(self.accuracy) == dict(other.accuracy) and dict(self.dropout) == dict(other.dropout) and
      self.emission_matrices.keys() == other.emission_matrices.keys() and
      all(numpy.array_equal(m, other.emission_matrices[cue]) for cue, m in self.emission_matrices.items()))

  __hash__ = None

  def with_cue(self, cue: CueKind, *, accuracy: Optional[float] = None, dropout: Optional[float] = None
               ) -> EmissionModel:
    acc, drop = dict(self.accuracy), dict(self.dropout)
    if accuracy is not None:
      acc[cue] = accuracy
    if dropout is not None:
      drop[cue] = dropout
    return EmissionModel(accuracy=acc, dropout=drop, emission_matrices=self.emission_matrices)

  def to_json_dict(self) -> Dict[str, Any]:
    emission = {}
    for cue in Cues:
      if cue in self.emission_matrices:
        emission[cue.value] = {"matrix": self.emission_matrices[cue].tolist()}
      elif cue in self.accuracy:
        emission[cue.value] = self.accuracy[cue]
    return {
      "emission": emission,
      "dropout": {cue.value: self.dropout[cue] for cue in Cues if cue in self.dropout},
    }


DefaultDropout = MappingProxyType({
  CueKind.FACIAL: 0.2,
  CueKind.SPEECH: 0.5,  # students speak in few windows
  CueKind.EYE: 0.2,
  CueKind.POSTURE: 0.2,
})


def default_emission() -> EmissionModel:
  """
  Accuracies of the selected per-cue classifiers (CNN for posture and facial, MLP for speech).
  No eye-tracking accuracy is known, 0.90 is a placeholder.
  """
  return EmissionModel(
    accuracy={CueKind.FACIAL: 0.6507, CueKind.SPEECH: 0.7315, CueKind.EYE: 0.90, CueKind.POSTURE: 0.9596},
    dropout=DefaultDropout)


def svm_emission() -> EmissionModel:
  """
  Like :func:`default_emission` but with the accuracies of the SVM alternatives for posture and facial.
  """
  return default_emission().with_cue(CueKind.POSTURE, accuracy=0.937).with_cue(CueKind.FACIAL, accuracy=0.4232)


def perfect_emission() -> EmissionModel:
  return EmissionModel(accuracy={cue: 1. for cue in Cues}, dropout={cue: 0. for cue in Cues})


def validate_emission(model: EmissionModel) -> List[Finding]:
  findings = []
  for cue in Cues:
    if cue in model.emission_matrices:
      m = model.emission_matrices[cue]
      shape = (len(Emotions), len(label_names(cue)))
      if m.shape != shape:
        findings.append(Finding("bad shape", f"emission.{cue.value}", f"expected {shape}, got {m.shape}"))
        continue
      for i, e in enumerate(Emotions):
        row = m[i]
        if not numpy.isfinite(row).all() or (row < 0.).any() or abs(math.fsum(row.tolist()) - 1.) > 1e-9:
          findings.append(Finding(
            "not stochastic", f"emission.{cue.value} row {i} ({e.value})",
            f"must be non-negative and sum to 1, got {row.tolist()}"))
    elif cue not in model.accuracy:
      findings.append(Finding("missing", f"emission.{cue.value}", "no accuracy and no emission matrix"))
    elif not 0. <= model.accuracy[cue] <= 1.:
      findings.append(Finding("out of range", f"emission.{cue.value}", f"accuracy {model.accuracy[cue]!r}"))
    if cue not in model.dropout:
      findings.append(Finding("missing", f"dropout.{cue.value}", "no dropout probability"))
    elif not 0. <= model.dropout[cue] <= 1.:
      findings.append(Finding("out of range", f"dropout.{cue.value}", f"dropout {model.dropout[cue]!r}"))
  return findings


def emission_from_json_dict(emission: Any, dropout: Any, *, base: Optional[EmissionModel] = None) -> EmissionModel:
  """
  :param emission: object cue -> accuracy number, or cue -> {"matrix": 5 x num labels array}. May be None.
  :param dropout: object cue -> probability. May be None.
  """
  if base is None:
    base = default_emission()
  accuracy, drop, matrices = dict(base.accuracy), dict(base.dropout), dict(base.emission_matrices)
  for name, value in _expect_cue_object(emission, "emission").items():
    cue = _parse_cue(name, "emission")
    if isinstance(value, dict):
      if list(value.keys()) != ["matrix"] or not isinstance(value["matrix"], list):
        raise ConfigError(f"emission.{name} must be a number or {{\"matrix\": [[...], ...]}}")
      try:
        matrices[cue] = numpy.array(value["matrix"], dtype="float64")
      except (TypeError, ValueError):
        raise ConfigError(f"emission.{name}.matrix must be an array of number arrays")
    else:
      accuracy[cue] = _expect_number(value, f"emission.{name}")
      matrices.pop(cue, None)
  for name, value in _expect_cue_object(dropout, "dropout").items():
    drop[_parse_cue(name, "dropout")] = _expect_number(value, f"dropout.{name}")
  return EmissionModel(accuracy=accuracy, dropout=drop, emission_matrices=matrices)


def _expect_cue_object(obj: Any, where: str) -> Dict[str, Any]:
  if obj is None:
    return {}
  if not isinstance(obj, dict):
    raise ConfigError(f"{where} must be an object keyed by cue")
  return obj


def _expect_number(obj: Any, where: str) -> float:
  if isinstance(obj, bool) or not isinstance(obj, (int, float)):
    raise ConfigError(f"{where} must be a number, got {obj!r}")
  return float(obj)


def _parse_cue(name: str, where: str) -> CueKind:
  try:
    return parse_cue(name)
  except UnknownLabel as exc:
    raise ConfigError(f"{where}: {exc}")


def emit(true_emotion: EmotionLabel, cue: CueKind, model: EmissionModel, table: MappingTable,
         rng: XorShift64Star, *, timestamp: int = 0, student_id: str = "s0") -> Optional[Observation]:
  """
  One emission attempt. Random draws, in this order:
  dropout (uniform), then either the emission matrix row (categorical),
  or accuracy (uniform) and the label within the chosen set (below).

  :return: the observation, or None if the cue dropped out
  """
  if rng.uniform() < model.dropout[cue]:
    return None
  space = label_space(cue)
  if cue in model.emission_matrices:
    label = space[rng.categorical(model.emission_matrices[cue][true_emotion.index])]
    return Observation(timestamp=timestamp, student_id=student_id, label=label)
  candidates = candidate_labels(cue, true_emotion, table)
  if not candidates:
    unique_print(
      f"simulator: no {cue.value} label maps to {true_emotion.value}, emitting uniformly over the whole space")
    label = space[rng.below(len(space))]
    return Observation(timestamp=timestamp, student_id=student_id, label=label)
  others = tuple(label for label in space if label not in candidates)
  if rng.uniform() < model.accuracy[cue] or not others:
    label = candidates[rng.below(len(candidates))]
  else:
    label = others[rng.below(len(others))]
  return Observation(timestamp=timestamp, student_id=student_id, label=label)
