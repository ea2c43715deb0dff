
"""
Closed label vocabularies: the five emotions, the four cues and the label space of each cue,
and the :class:`Observation` record which all other modules consume.

All label spaces are ordered alphabetically.
That order is the tie-break whenever we take the argmax of a distribution over a cue space.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union
import math
from .errors import UnknownLabel, BadDistribution


class EmotionLabel(Enum):
  BORED = "bored"
  CONFUSED = "confused"
  FRUSTRATED = "frustrated"
  INTERESTED = "interested"
  NEUTRAL = "neutral"

  def __str__(self):
    return self.value

  @property
  def index(self) -> int:
    return _EmotionIndex[self]


class CueKind(Enum):
  """
  The enumeration order is the canonical accumulation order in fusion.
  """
  FACIAL = "facial"
  SPEECH = "speech"
  EYE = "eye"
  POSTURE = "posture"

  def __str__(self):
    return self.value


Emotions = tuple(EmotionLabel)  # type: Tuple[EmotionLabel, ...]
Cues = tuple(CueKind)  # type: Tuple[CueKind, ...]
_EmotionIndex = {e: i for i, e in enumerate(Emotions)}

_LabelSpaceNames = {
  CueKind.FACIAL: tuple(e.value for e in Emotions),
  CueKind.SPEECH: tuple(e.value for e in Emotions),
  CueKind.EYE: ("looking_at_screen", "looking_away"),
  CueKind.POSTURE: ("slouching", "upright", "writing"),
}  # type: Dict[CueKind, Tuple[str, ...]]

# Tolerance for distributions summing to 1.
DistributionTolerance = 1e-6


@dataclass(frozen=True)
class CueLabel:
  """
  One output label of one cue, e.g. ``CueLabel(CueKind.POSTURE, "slouching")``.
  """
  cue: CueKind
  label: str

  def __post_init__(self):
    if self.label not in _LabelSpaceNames[self.cue]:
      raise UnknownLabel(f"{self.label!r} is not a label of cue {self.cue.value!r}")

  def __str__(self):
    return self.label

  @property
  def index(self) -> int:
    """
    Position within :func:`label_space`.
    """
    return _LabelSpaceNames[self.cue].index(self.label)

  def as_emotion(self) -> Optional[EmotionLabel]:
    """
    :return: the emotion if this is a label of an emotion-valued cue (facial, speech)
    """
    if self.cue in (CueKind.FACIAL, CueKind.SPEECH):
      return EmotionLabel(self.label)
    return None


_LabelSpaces = {
  cue: tuple(CueLabel(cue, name) for name in names)
  for cue, names in _LabelSpaceNames.items()}  # type: Dict[CueKind, Tuple[CueLabel, ...]]


def label_space(cue: CueKind) -> Tuple[CueLabel, ...]:
  """
  :return: all labels of the cue, in the fixed documented order. Always the same tuple object.
  """
  return _LabelSpaces[cue]


def label_names(cue: CueKind) -> Tuple[str, ...]:
  return _LabelSpaceNames[cue]


def parse_emotion(text: str) -> EmotionLabel:
  """
  Case-insensitive.
  """
  if isinstance(text, str):
    try:
      return EmotionLabel(text.lower())
    except ValueError:
      pass
  raise UnknownLabel(f"unknown emotion {text!r}, expected one of {[e.value for e in Emotions]}")


def parse_cue(text: str) -> CueKind:
  if isinstance(text, str):
    try:
      return CueKind(text.lower())
    except ValueError:
      pass
  raise UnknownLabel(f"unknown cue {text!r}, expected one of {[c.value for c in Cues]}")


def parse_cue_label(cue: CueKind, text: str) -> CueLabel:
  """
  Case-insensitive. Labels of another cue's space are rejected.
  """
  if not isinstance(text, str):
    raise UnknownLabel(f"label must be a string, got {text!r}")
  return CueLabel(cue, text.lower())


def render_label(label: Union[EmotionLabel, CueKind, CueLabel, str]) -> str:
  """
  Canonical lowercase spelling, as used in every file format.
  """
  if isinstance(label, (EmotionLabel, CueKind)):
    return label.value
  if isinstance(label, CueLabel):
    return label.label
  assert isinstance(label, str)
  return label


def argmax_index(values: Sequence[float]) -> int:
  """
  First maximum, i.e. ties go to the earlier label of the declared order.
  """
  assert len(values) > 0
  best = 0
  for i in range(1, len(values)):
    if values[i] > values[best]:
      best = i
  return best


def check_distribution(cue: CueKind, dist: Sequence[float]) -> Tuple[float, ...]:
  """
  :param dist: probabilities aligned with :func:`label_space`
  :return: as float tuple
  """
  n = len(_LabelSpaceNames[cue])
  if len(dist) != n:
    raise BadDistribution(f"cue {cue.value!r}: expected {n} probabilities, got {len(dist)}")
  dist = tuple(float(p) for p in dist)
  for p in dist:
    if not math.isfinite(p) or p < 0.:
      raise BadDistribution(f"cue {cue.value!r}: invalid probability {p!r} in {dist!r}")
  if abs(math.fsum(dist) - 1.) > DistributionTolerance:
    raise BadDistribution(f"cue {cue.value!r}: probabilities sum to {math.fsum(dist)!r}, not 1")
  return dist


def distribution_from_mapping(cue: CueKind, dist: Mapping[str, float]) -> Tuple[float, ...]:
  """
  :param dist: label name -> probability. Missing labels get 0.
  """
  names = _LabelSpaceNames[cue]
  for key in dist:
    if key not in names:
      raise UnknownLabel(f"{key!r} is not a label of cue {cue.value!r}")
  return check_distribution(cue, [dist.get(name, 0.) for name in names])


@dataclass(frozen=True)
class Observation:
  """
  One timestamped output of one cue classifier for one student.

  :param timestamp: milliseconds since epoch
  :param confidence: optional distribution aligned with ``label_space(label.cue)``.
    Its argmax (first maximum) must be ``label``.
  """
  timestamp: int
  student_id: str
  label: CueLabel
  confidence: Optional[Tuple[float, ...]] = None

  def __post_init__(self):
    if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int):
      raise TypeError(f"timestamp must be an int, got {self.timestamp!r}")
    if self.timestamp < 0:
      raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")
    if not isinstance(self.student_id, str) or not self.student_id:
      raise ValueError(f"student_id must be a non-empty string, got {self.student_id!r}")
    if self.confidence is not None:
      dist = check_distribution(self.cue, self.confidence)
      object.__setattr__(self, "confidence", dist)
      top = argmax_index(dist)
      if top != self.label.index:
        raise BadDistribution(
          f"confidence argmax {_LabelSpaceNames[self.cue][top]!r} does not match label {self.label.label!r}")

  @property
  def cue(self) -> CueKind:
    return self.label.cue

  @classmethod
  def make(cls, timestamp: int, student_id: str, cue: Union[CueKind, str], label: str, *,
           confidence: Optional[Mapping[str, float]] = None) -> Observation:
    """
    Convenience constructor from plain strings, as found in the JSONL input.
    """
    if not isinstance(cue, CueKind):
      cue = parse_cue(cue)
    return cls(
      timestamp=timestamp, student_id=student_id, label=parse_cue_label(cue, label),
      confidence=distribution_from_mapping(cue, confidence) if confidence is not None else None)

  def distribution(self) -> Tuple[float, ...]:
    """
    :return: the confidence, or the one-hot distribution of the label
    """
    if self.confidence is not None:
      return self.confidence
    return tuple(1. if i == self.label.index else 0. for i in range(len(_LabelSpaceNames[self.cue])))
