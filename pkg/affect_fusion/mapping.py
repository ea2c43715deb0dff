
"""
The mapping function ``Map``: cue output label -> set of emotions it evidences.
Also the remapping of 7-class facial expression classifiers into our five emotions.

Facial and speech already output emotions and map to themselves by default.
Eye and posture labels are not emotions and map to sets.
Only the ``looking_at_screen`` entry is fixed by the original architecture description;
the other non-emotion entries are our defaults, chosen such that the standard example
(facial=frustrated, eye=looking_at_screen, speech=confused, posture=slouching)
fuses to frustrated under the default weights.
"""

from __future__ import annotations
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union
import numpy
from .errors import ConfigError, Finding, UnknownLabel, raise_on_findings
from .taxonomy import (
  CueKind, CueLabel, Cues, EmotionLabel, Emotions, label_names, label_space, parse_cue, parse_emotion)


_Key = Tuple[CueKind, str]


class MappingTable:
  """
  Immutable. May be incomplete (e.g. directly after loading a config file);
  use :func:`validate_mapping` before handing it to fusion.
  """

  def __init__(self, entries: Mapping[Tuple[CueKind, Union[str, CueLabel]], Iterable[EmotionLabel]]):
    d = {}  # type: Dict[_Key, FrozenSet[EmotionLabel]]
    for (cue, label), emotions in entries.items():
      assert isinstance(cue, CueKind)
      label = CueLabel(cue, label.label if isinstance(label, CueLabel) else label)
      emotions = frozenset(emotions)
      assert all(isinstance(e, EmotionLabel) for e in emotions)
      d[(cue, label.label)] = emotions
    self._entries = MappingProxyType(d)
    self._membership = MappingProxyType({cue: self._make_membership(cue) for cue in Cues})

  def __repr__(self):
    return f"<{self.__class__.__name__} with {len(self._entries)} entries>"

  def __eq__(self, other):
    if not isinstance(other, MappingTable):
      return NotImplemented
    return dict(self._entries) == dict(other._entries)

  def __hash__(self):
    return hash(frozenset(self._entries.items()))

  @property
  def entries(self) -> Mapping[_Key, FrozenSet[EmotionLabel]]:
    return self._entries

  def get(self, cue: CueKind, label: Union[str, CueLabel]) -> Optional[FrozenSet[EmotionLabel]]:
    if isinstance(label, CueLabel):
      assert label.cue == cue
      label = label.label
    return self._entries.get((cue, label))

  def membership(self, cue: CueKind) -> numpy.ndarray:
    """
    :return: float64 matrix (num labels of cue, 5), 1.0 where the emotion is in the mapped set.
      Read-only. Missing entries give zero rows.
    """
    return self._membership[cue]

  def _make_membership(self, cue: CueKind) -> numpy.ndarray:
    names = label_names(cue)
    m = numpy.zeros((len(names), len(Emotions)), dtype="float64")
    for i, name in enumerate(names):
      for e in self._entries.get((cue, name), ()):
        m[i, e.index] = 1.
    m.flags.writeable = False
    return m

  @classmethod
  def from_json_dict(cls, d: Any) -> MappingTable:
    """
    :param d: ``{cue: {label: [emotion, ...]}}``. Unknown cues, labels or emotions are errors.
      Missing entries are not (see :func:`validate_mapping`).
    """
    if not isinstance(d, dict):
      raise ConfigError(f"mapping must be a JSON object keyed by cue, got {type(d).__name__}")
    entries = {}
    for cue_name, labels in d.items():
      try:
        cue = parse_cue(cue_name)
      except UnknownLabel as exc:
        raise ConfigError(f"mapping: {exc}")
      if not isinstance(labels, dict):
        raise ConfigError(f"mapping[{cue_name!r}] must be an object keyed by cue label")
      for label, emotions in labels.items():
        if label not in label_names(cue):
          raise ConfigError(f"mapping[{cue_name!r}]: unknown label {label!r}, expected one of {label_names(cue)}")
        if not isinstance(emotions, list):
          raise ConfigError(f"mapping[{cue_name!r}][{label!r}] must be an array of emotions")
        try:
          entries[(cue, label)] = [parse_emotion(e) for e in emotions]
        except UnknownLabel as exc:
          raise ConfigError(f"mapping[{cue_name!r}][{label!r}]: {exc}")
    return cls(entries)

  def to_json_dict(self) -> Dict[str, Dict[str, List[str]]]:
    """
    Canonical order: cues, labels and emotions in declared order.
    """
    res = {}
    for cue in Cues:
      labels = {}
      for name in label_names(cue):
        emotions = self._entries.get((cue, name))
        if emotions is not None:
          labels[name] = [e.value for e in Emotions if e in emotions]
      if labels:
        res[cue.value] = labels
    return res


def default_mapping() -> MappingTable:
  entries = {}
  for cue in (CueKind.FACIAL, CueKind.SPEECH):
    for e in Emotions:
      entries[(cue, e.value)] = {e}
  entries[(CueKind.EYE, "looking_at_screen")] = {
    EmotionLabel.CONFUSED, EmotionLabel.FRUSTRATED, EmotionLabel.INTERESTED}
  entries[(CueKind.EYE, "looking_away")] = {EmotionLabel.BORED}
  entries[(CueKind.POSTURE, "slouching")] = {EmotionLabel.BORED, EmotionLabel.FRUSTRATED}
  entries[(CueKind.POSTURE, "upright")] = {EmotionLabel.NEUTRAL, EmotionLabel.INTERESTED}
  entries[(CueKind.POSTURE, "writing")] = {EmotionLabel.INTERESTED}
  return MappingTable(entries)


def validate_mapping(table: MappingTable) -> List[Finding]:
  """
  :return: one finding per missing (cue, label) entry, per empty set,
    and per emotion which no cue label maps to. Empty list means usable by fusion.
  """
  findings = []
  reachable = set()
  for cue in Cues:
    for name in label_names(cue):
      emotions = table.get(cue, name)
      where = f"{cue.value}/{name}"
      if emotions is None:
        findings.append(Finding("missing entry", where, "no emotion set for this cue label"))
      elif not emotions:
        findings.append(Finding("empty set", where, "cue label maps to no emotion"))
      else:
        reachable.update(emotions)
  for e in Emotions:
    if e not in reachable:
      findings.append(Finding("unreachable emotion", e.value, "no cue label maps to this emotion"))
  return findings


def check_mapping(table: MappingTable):
  """
  :raises ConfigError: if :func:`validate_mapping` has findings
  """
  raise_on_findings("mapping table", validate_mapping(table))


def map_cue_output(cue: CueKind, label: Union[CueLabel, str], table: MappingTable) -> FrozenSet[EmotionLabel]:
  """
  :return: ``Map(cue, label)``. Never empty for a valid table.
  """
  if not isinstance(label, CueLabel):
    label = CueLabel(cue, label)
  assert label.cue == cue, f"label {label} does not belong to cue {cue}"
  emotions = table.get(cue, label)
  assert emotions, f"mapping table has no emotions for {cue.value}/{label.label}, validate it first"
  return emotions


def candidate_labels(cue: CueKind, emotion: EmotionLabel, table: MappingTable) -> Tuple[CueLabel, ...]:
  """
  Inverse map: all labels of the cue whose mapped set contains the emotion, in label order.
  """
  return tuple(label for label in label_space(cue) if emotion in (table.get(cue, label) or ()))


class Fer7Label(Enum):
  HAPPY = "happy"
  SAD = "sad"
  ANGRY = "angry"
  AFRAID = "afraid"
  SURPRISE = "surprise"
  DISGUST = "disgust"
  NEUTRAL = "neutral"

  def __str__(self):
    return self.value


_Fer7Remap = {
  Fer7Label.HAPPY: EmotionLabel.INTERESTED,
  Fer7Label.SURPRISE: EmotionLabel.INTERESTED,
  Fer7Label.SAD: EmotionLabel.BORED,
  Fer7Label.ANGRY: EmotionLabel.FRUSTRATED,
  Fer7Label.DISGUST: EmotionLabel.FRUSTRATED,
  Fer7Label.AFRAID: EmotionLabel.CONFUSED,
  Fer7Label.NEUTRAL: EmotionLabel.NEUTRAL,
}

# Spellings used by common FER datasets and classifiers.
_Fer7Aliases = {
  "fear": Fer7Label.AFRAID,
  "surprised": Fer7Label.SURPRISE,
  "disgusted": Fer7Label.DISGUST,
}


def remap_fer7(label: Fer7Label) -> EmotionLabel:
  return _Fer7Remap[label]


def parse_fer7(text: str) -> Fer7Label:
  text = text.lower() if isinstance(text, str) else text
  if text in _Fer7Aliases:
    return _Fer7Aliases[text]
  try:
    return Fer7Label(text)
  except ValueError:
    raise UnknownLabel(f"unknown 7-class facial label {text!r}, expected one of {[x.value for x in Fer7Label]}")


def remap_fer7_text(text: str) -> EmotionLabel:
  return remap_fer7(parse_fer7(text))
