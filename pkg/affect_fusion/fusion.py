
"""
Weighted-majority decision fusion.

Every present cue i with output j adds ``W_i * w_{i,j}`` to the score of every emotion in ``Map(i, j)``.
The fused emotion is the argmax over the five scores, ties resolved by a fixed emotion order.

With confidence distributions instead of hard labels,
each cue contributes the vector ``o_i[e] = sum_j p_j * w_{i,j} * [e in Map(i, j)]``,
and the scores are ``sum_i W_i * o_i``.
Both paths share the same arithmetic, so one-hot distributions give bit-identical scores.

Cues are always accumulated in :class:`CueKind` enumeration order.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import numpy
from .errors import ConfigError, Finding, InsufficientCues, NoEvidence, UnknownLabel, raise_on_findings
from .mapping import MappingTable
from .taxonomy import (
  CueKind, CueLabel, Cues, EmotionLabel, Emotions,
  check_distribution, distribution_from_mapping, label_names, parse_cue, parse_emotion)


DefaultTieBreak = (
  EmotionLabel.NEUTRAL, EmotionLabel.INTERESTED, EmotionLabel.BORED, EmotionLabel.CONFUSED, EmotionLabel.FRUSTRATED)

# Rounded validation accuracies of the per-cue classifiers. No eye accuracy is known, 0.90 is a placeholder.
DefaultCueWeights = MappingProxyType({
  CueKind.FACIAL: 0.65,
  CueKind.SPEECH: 0.73,
  CueKind.EYE: 0.90,
  CueKind.POSTURE: 0.96,
})


@dataclass(frozen=True)
class MissingCuePolicy:
  """
  :param kind: "skip", "renormalize" or "require"
  :param min_cues: only for "require", 1..4
  """
  kind: str
  min_cues: int = 0

  Kinds = ("skip", "renormalize", "require")

  def __str__(self):
    if self.kind == "require":
      return f"require:{self.min_cues}"
    return self.kind

  @classmethod
  def require(cls, min_cues: int) -> MissingCuePolicy:
    return cls("require", min_cues)

  @classmethod
  def parse(cls, obj: Any) -> MissingCuePolicy:
    """
    :param obj: "skip", "renormalize", "require:K", or ``{"require": K}``
    """
    if isinstance(obj, dict) and list(obj.keys()) == ["require"]:
      k = obj["require"]
      if isinstance(k, int) and not isinstance(k, bool):
        return cls.require(k)
    if isinstance(obj, str):
      if obj in ("skip", "renormalize"):
        return cls(obj)
      if obj.startswith("require:"):
        try:
          return cls.require(int(obj[len("require:"):]))
        except ValueError:
          pass
    raise ConfigError(f"invalid missing_cue_policy {obj!r}, expected 'skip', 'renormalize' or {{'require': K}}")

  def to_json(self) -> Union[str, Dict[str, int]]:
    if self.kind == "require":
      return {"require": self.min_cues}
    return self.kind


Skip = MissingCuePolicy("skip")
Renormalize = MissingCuePolicy("renormalize")


@dataclass(frozen=True)
class FusionConfig:
  """
  :param cue_weights: W_i per cue
  :param sub_weights: w_{i,j} per cue, aligned with the cue's label space
  :param tie_break: permutation of the five emotions, earlier wins ties
  """
  cue_weights: Mapping[CueKind, float]
  sub_weights: Mapping[CueKind, Tuple[float, ...]]
  tie_break: Tuple[EmotionLabel, ...] = DefaultTieBreak
  missing_cue_policy: MissingCuePolicy = field(default=Skip)

  def __post_init__(self):
    object.__setattr__(self, "cue_weights", MappingProxyType(
      {cue: float(self.cue_weights[cue]) for cue in Cues if cue in self.cue_weights}))
    object.__setattr__(self, "sub_weights", MappingProxyType(
      {cue: tuple(float(w) for w in self.sub_weights[cue]) for cue in Cues if cue in self.sub_weights}))
    object.__setattr__(self, "tie_break", tuple(self.tie_break))

  def __hash__(self):
    return hash((
      tuple(self.cue_weights.items()), tuple(self.sub_weights.items()), self.tie_break, self.missing_cue_policy))

  def sub_weight(self, cue: CueKind, label: Union[CueLabel, str]) -> float:
    if isinstance(label, CueLabel):
      return self.sub_weights[cue][label.index]
    return self.sub_weights[cue][label_names(cue).index(label)]

  def with_cue_weight(self, cue: CueKind, weight: float) -> FusionConfig:
    """
    E.g. lower the speech weight for a student who cannot or does not speak.
    """
    cue_weights = dict(self.cue_weights)
    cue_weights[cue] = weight
    return replace(self, cue_weights=cue_weights)

  def with_policy(self, policy: MissingCuePolicy) -> FusionConfig:
    return replace(self, missing_cue_policy=policy)

  def scaled(self, cue_factor: float = 1., sub_factor: float = 1.) -> FusionConfig:
    """
    All cue weights times cue_factor, all sub-weights times sub_factor.
    """
    return replace(
      self,
      cue_weights={cue: w * cue_factor for cue, w in self.cue_weights.items()},
      sub_weights={cue: tuple(w * sub_factor for w in ws) for cue, ws in self.sub_weights.items()})

  @classmethod
  def from_json_dict(cls, d: Any, *, base: Optional[FusionConfig] = None) -> FusionConfig:
    """
    :param d: keys cue_weights, sub_weights, tie_break, missing_cue_policy. Omitted keys
      (also individual omitted cues or cue labels) are taken from base.
    :param base: defaults to :func:`default_config`
    """
    if base is None:
      base = default_config()
    if not isinstance(d, dict):
      raise ConfigError(f"fusion config must be a JSON object, got {type(d).__name__}")
    unknown = set(d.keys()) - {"cue_weights", "sub_weights", "tie_break", "missing_cue_policy"}
    if unknown:
      raise ConfigError(f"fusion config: unknown keys {sorted(unknown)}")

    cue_weights = dict(base.cue_weights)
    for cue_name, w in _expect_object(d.get("cue_weights", {}), "cue_weights").items():
      cue_weights[_parse_cue(cue_name, "cue_weights")] = _expect_number(w, f"cue_weights.{cue_name}")

    sub_weights = {cue: list(ws) for cue, ws in base.sub_weights.items()}
    for cue_name, labels in _expect_object(d.get("sub_weights", {}), "sub_weights").items():
      cue = _parse_cue(cue_name, "sub_weights")
      names = label_names(cue)
      ws = sub_weights.setdefault(cue, [1.] * len(names))
      for label, w in _expect_object(labels, f"sub_weights.{cue_name}").items():
        if label not in names:
          raise ConfigError(f"sub_weights.{cue_name}: unknown label {label!r}, expected one of {names}")
        ws[names.index(label)] = _expect_number(w, f"sub_weights.{cue_name}.{label}")

    tie_break = base.tie_break
    if "tie_break" in d:
      if not isinstance(d["tie_break"], list):
        raise ConfigError("tie_break must be an array of emotions")
      try:
        tie_break = tuple(parse_emotion(e) for e in d["tie_break"])
      except UnknownLabel as exc:
        raise ConfigError(f"tie_break: {exc}")

    policy = base.missing_cue_policy
    if "missing_cue_policy" in d:
      policy = MissingCuePolicy.parse(d["missing_cue_policy"])

    return cls(cue_weights=cue_weights, sub_weights=sub_weights, tie_break=tie_break, missing_cue_policy=policy)

  def to_json_dict(self) -> Dict[str, Any]:
    return {
      "cue_weights": {cue.value: w for cue, w in self.cue_weights.items()},
      "sub_weights": {
        cue.value: dict(zip(label_names(cue), ws)) for cue, ws in self.sub_weights.items()},
      "tie_break": [e.value for e in self.tie_break],
      "missing_cue_policy": self.missing_cue_policy.to_json(),
    }


def _expect_object(obj: Any, where: str) -> Dict[str, Any]:
  if not isinstance(obj, dict):
    raise ConfigError(f"{where} must be a JSON object")
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


def default_config() -> FusionConfig:
  return FusionConfig(
    cue_weights=DefaultCueWeights,
    sub_weights={cue: (1.,) * len(label_names(cue)) for cue in Cues},
    tie_break=DefaultTieBreak,
    missing_cue_policy=Skip)


def majority_config() -> FusionConfig:
  """
  Plain majority voting: every cue and every cue output counts the same.
  """
  return FusionConfig(
    cue_weights={cue: 1. for cue in Cues},
    sub_weights={cue: (1.,) * len(label_names(cue)) for cue in Cues},
    tie_break=DefaultTieBreak,
    missing_cue_policy=Skip)


def validate_fusion_config(config: FusionConfig) -> List[Finding]:
  findings = []
  for cue in Cues:
    if cue not in config.cue_weights:
      findings.append(Finding("missing weight", cue.value, "no cue weight"))
    elif not config.cue_weights[cue] >= 0.:  # also catches nan
      findings.append(Finding("negative weight", cue.value, f"cue weight {config.cue_weights[cue]!r} < 0"))
  if not any(w > 0. for w in config.cue_weights.values()):
    findings.append(Finding("zero weights", "cue_weights", "at least one cue weight must be > 0"))
  for cue in Cues:
    names = label_names(cue)
    ws = config.sub_weights.get(cue)
    if ws is None or len(ws) != len(names):
      findings.append(Finding("missing weight", cue.value, f"sub-weights must cover all labels {names}"))
      continue
    for name, w in zip(names, ws):
      if not w >= 0.:
        findings.append(Finding("negative weight", f"{cue.value}/{name}", f"sub-weight {w!r} < 0"))
  if sorted(config.tie_break, key=lambda e: e.index) != list(Emotions):
    findings.append(Finding(
      "bad tie_break", "tie_break",
      f"must be a permutation of all five emotions, got {[e.value for e in config.tie_break]}"))
  policy = config.missing_cue_policy
  if policy.kind not in MissingCuePolicy.Kinds:
    findings.append(Finding("bad policy", "missing_cue_policy", f"unknown kind {policy.kind!r}"))
  elif policy.kind == "require" and not 1 <= policy.min_cues <= len(Cues):
    findings.append(Finding("bad policy", "missing_cue_policy", f"require({policy.min_cues}) outside 1..{len(Cues)}"))
  return findings


def check_fusion_config(config: FusionConfig):
  raise_on_findings("fusion config", validate_fusion_config(config))


class EmotionScores:
  """
  Immutable non-negative score per emotion for one student-window,
  plus the set of cues which contributed.
  """

  def __init__(self, values: Union[numpy.ndarray, Sequence[float]], contributing_cues: Iterable[CueKind] = (),
               *, ranking_values: Optional[Union[numpy.ndarray, Sequence[float]]] = None):
    """
    :param values: the reported scores
    :param ranking_values: what :func:`decide` and :func:`rank` compare, defaults to values.
      Under renormalize, the sums before the common factor.
    """
    values = numpy.array(values, dtype="float64")
    assert values.shape == (len(Emotions),)
    values.flags.writeable = False
    self.values = values
    if ranking_values is None:
      self.ranking_values = values
    else:
      ranking_values = numpy.array(ranking_values, dtype="float64")
      assert ranking_values.shape == values.shape
      ranking_values.flags.writeable = False
      self.ranking_values = ranking_values
    self.contributing_cues = frozenset(contributing_cues)  # type: FrozenSet[CueKind]
    assert self.contributing_cues or not values.any(), "scores without contributing cues must be zero"

  @classmethod
  def zeros(cls) -> EmotionScores:
    return cls(numpy.zeros(len(Emotions)))

  def __repr__(self):
    scores = ", ".join(f"{e.value}={self.values[e.index]!r}" for e in Emotions)
    cues = ",".join(cue.value for cue in Cues if cue in self.contributing_cues)
    return f"<{self.__class__.__name__} {scores} cues=[{cues}]>"

  def __eq__(self, other):
    """
    Bitwise comparison of the scores.
    """
    if not isinstance(other, EmotionScores):
      return NotImplemented
    return (
      self.contributing_cues == other.contributing_cues and
      self.values.tobytes() == other.values.tobytes() and
      self.ranking_values.tobytes() == other.ranking_values.tobytes())

  def __hash__(self):
    return hash((self.values.tobytes(), self.contributing_cues))

  def __getitem__(self, emotion: EmotionLabel) -> float:
    return float(self.values[emotion.index])

  @property
  def has_evidence(self) -> bool:
    return bool(self.contributing_cues)

  def total(self) -> float:
    return float(self.values.sum())

  def as_dict(self) -> Dict[str, float]:
    return {e.value: float(self.values[e.index]) for e in Emotions}


def _cue_policy_factor(present: Sequence[CueKind], config: FusionConfig) -> Optional[float]:
  policy = config.missing_cue_policy
  if policy.kind == "require" and len(present) < policy.min_cues:
    raise InsufficientCues(present=len(present), required=policy.min_cues)
  if policy.kind == "renormalize" and present:
    present_weight = sum(config.cue_weights[cue] for cue in present)
    if present_weight > 0.:
      return sum(config.cue_weights[cue] for cue in Cues) / present_weight
  return None


def _combine(cue_vectors: Mapping[CueKind, numpy.ndarray], config: FusionConfig) -> EmotionScores:
  """
  :param cue_vectors: per present cue, the sub-weighted emotion vector o_i
  """
  present = [cue for cue in Cues if cue in cue_vectors]
  factor = _cue_policy_factor(present, config)
  scores = numpy.zeros(len(Emotions), dtype="float64")
  for cue in present:
    scores = scores + config.cue_weights[cue] * cue_vectors[cue]
  if factor is None:
    return EmotionScores(scores, present)
  # One common factor on the finished sums. Ranking uses the unscaled sums, identical to skip.
  return EmotionScores(scores * factor, present, ranking_values=scores)


def accumulate_scores(window_outputs: Mapping[CueKind, Union[CueLabel, str, None]],
                      config: FusionConfig, table: MappingTable) -> EmotionScores:
  """
  :param window_outputs: at most one output label per cue. Absent (or None) cues are missing.
  :raises InsufficientCues: under policy require(k) with fewer than k cues
  """
  cue_vectors = {}
  for cue in Cues:
    label = window_outputs.get(cue)
    if label is None:
      continue
    if not isinstance(label, CueLabel):
      label = CueLabel(cue, label)
    assert label.cue == cue, f"output {label} given for cue {cue}"
    j = label.index
    cue_vectors[cue] = config.sub_weights[cue][j] * table.membership(cue)[j]
  return _combine(cue_vectors, config)


def fuse_distributions(window_outputs: Mapping[CueKind, Union[Sequence[float], Mapping[str, float], None]],
                       config: FusionConfig, table: MappingTable) -> EmotionScores:
  """
  :param window_outputs: per present cue, a distribution over the cue's label space,
    either aligned with the label order or as label -> probability
  :raises BadDistribution: negative mass, wrong size, or sum not 1 within 1e-6
  """
  cue_vectors = {}
  for cue in Cues:
    dist = window_outputs.get(cue)
    if dist is None:
      continue
    if isinstance(dist, Mapping):
      dist = distribution_from_mapping(cue, dist)
    else:
      dist = check_distribution(cue, dist)
    membership = table.membership(cue)
    sub_weights = config.sub_weights[cue]
    o = numpy.zeros(len(Emotions), dtype="float64")
    for j, p in enumerate(dist):
      o = o + (p * sub_weights[j]) * membership[j]
    cue_vectors[cue] = o
  return _combine(cue_vectors, config)


def decide(scores: EmotionScores, tie_break: Sequence[EmotionLabel] = DefaultTieBreak) -> EmotionLabel:
  """
  :return: the emotion with the strictly greatest score; among equal maxima the earliest in tie_break
  :raises NoEvidence: if no cue contributed
  """
  if not scores.contributing_cues:
    raise NoEvidence("no cue contributed to these scores")
  values = scores.ranking_values
  best = None
  for e in tie_break:
    if best is None or values[e.index] > values[best.index]:
      best = e
  assert best is not None
  return best


def rank(scores: EmotionScores, tie_break: Sequence[EmotionLabel] = DefaultTieBreak) -> Tuple[EmotionLabel, ...]:
  """
  :return: all emotions, best first. Equal scores keep the tie_break order.
  """
  values = scores.ranking_values
  return tuple(sorted(tie_break, key=lambda e: -values[e.index]))


def fuse_labels(window_outputs: Mapping[CueKind, Union[CueLabel, str, None]],
                config: FusionConfig, table: MappingTable) -> EmotionLabel:
  """
  :func:`accumulate_scores` followed by :func:`decide`.
  """
  return decide(accumulate_scores(window_outputs, config, table), config.tie_break)
