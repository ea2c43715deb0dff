
"""
Ground-truth emotion process: one Markov chain per student, one step per tick (window).
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple
import math
import numpy
from ..errors import ConfigError, Finding, UnknownLabel
from ..taxonomy import EmotionLabel, Emotions, parse_emotion
from .rng import XorShift64Star

StochasticTolerance = 1e-9


@dataclass(frozen=True)
class GroundTruthProcess:
  """
  :param transition: (5, 5), row = current emotion, column = next emotion
  :param initial: (5,) distribution of the first tick
  :param step_ms: duration of one tick
  """
  transition: numpy.ndarray
  initial: numpy.ndarray
  step_ms: int = 5000

  def __post_init__(self):
    transition = numpy.array(self.transition, dtype="float64")
    initial = numpy.array(self.initial, dtype="float64")
    transition.flags.writeable = False
    initial.flags.writeable = False
    object.__setattr__(self, "transition", transition)
    object.__setattr__(self, "initial", initial)

  def __eq__(self, other):
    if not isinstance(other, GroundTruthProcess):
      return NotImplemented
    return (
      self.step_ms == other.step_ms and
      numpy.array_equal(self.transition, other.transition) and numpy.array_equal(self.initial, other.initial))

  __hash__ = None

  def sample_initial(self, rng: XorShift64Star) -> EmotionLabel:
    return Emotions[rng.categorical(self.initial)]

  def sample_next(self, current: EmotionLabel, rng: XorShift64Star) -> EmotionLabel:
    return Emotions[rng.categorical(self.transition[current.index])]

  def to_json_dict(self) -> Dict[str, Any]:
    return {
      "transition": self.transition.tolist(),
      "initial": self.initial.tolist(),
      "step_ms": self.step_ms,
    }


def default_process(stay: float = 0.85, *, step_ms: int = 5000) -> GroundTruthProcess:
  """
  Stay in the current emotion with probability ``stay``, otherwise move uniformly to one of the other four.
  Uniform initial distribution.
  """
  n = len(Emotions)
  move = round((1. - stay) / (n - 1), 12)  # 0.0375 rather than 0.037500000000000006
  transition = numpy.full((n, n), move)
  numpy.fill_diagonal(transition, stay)
  return GroundTruthProcess(transition=transition, initial=numpy.full((n,), 1. / n), step_ms=step_ms)


def _check_distribution_row(row: numpy.ndarray, where: str, findings: List[Finding]):
  if not numpy.isfinite(row).all() or (row < 0.).any():
    findings.append(Finding("negative probability", where, f"entries must be finite and >= 0, got {row.tolist()}"))
  elif abs(math.fsum(row.tolist()) - 1.) > StochasticTolerance:
    findings.append(Finding("not stochastic", where, f"sums to {math.fsum(row.tolist())!r}, not 1"))


def validate_process(process: GroundTruthProcess) -> List[Finding]:
  findings = []
  n = len(Emotions)
  if process.transition.shape != (n, n):
    findings.append(Finding("bad shape", "transition", f"expected ({n}, {n}), got {process.transition.shape}"))
  else:
    for i in range(n):
      _check_distribution_row(process.transition[i], f"transition row {i} ({Emotions[i].value})", findings)
  if process.initial.shape != (n,):
    findings.append(Finding("bad shape", "initial", f"expected ({n},), got {process.initial.shape}"))
  else:
    _check_distribution_row(process.initial, "initial", findings)
  if isinstance(process.step_ms, bool) or not isinstance(process.step_ms, int) or process.step_ms <= 0:
    findings.append(Finding("bad step", "step_ms", f"must be a positive integer, got {process.step_ms!r}"))
  return findings


def _parse_matrix(obj: Any, where: str) -> numpy.ndarray:
  """
  Accepts an array of arrays, or an object emotion -> (array or object emotion -> number).
  """
  n = len(Emotions)
  if isinstance(obj, dict):
    rows = []
    for e in Emotions:
      if e.value not in obj:
        raise ConfigError(f"{where}: missing row {e.value!r}")
      rows.append(_parse_vector(obj[e.value], f"{where}.{e.value}"))
    unknown = set(obj.keys()) - {e.value for e in Emotions}
    if unknown:
      raise ConfigError(f"{where}: unknown rows {sorted(unknown)}")
    return numpy.array(rows)
  if isinstance(obj, list) and len(obj) == n:
    return numpy.array([_parse_vector(row, f"{where}[{i}]") for i, row in enumerate(obj)])
  raise ConfigError(f"{where} must be a {n}x{n} array, or an object keyed by emotion")


def _parse_vector(obj: Any, where: str) -> List[float]:
  n = len(Emotions)
  if isinstance(obj, dict):
    try:
      keys = {parse_emotion(k): v for k, v in obj.items()}
    except UnknownLabel as exc:
      raise ConfigError(f"{where}: {exc}")
    obj = [keys.get(e, 0.) for e in Emotions]
  if not isinstance(obj, list) or len(obj) != n:
    raise ConfigError(f"{where} must be an array of {n} numbers")
  for x in obj:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
      raise ConfigError(f"{where}: expected numbers, got {x!r}")
  return [float(x) for x in obj]


def process_from_json_dict(d: Dict[str, Any], *, base: Optional[GroundTruthProcess] = None) -> GroundTruthProcess:
  """
  :param d: may contain transition, initial, step_ms. Omitted keys are taken from base.
  """
  if base is None:
    base = default_process()
  transition = _parse_matrix(d["transition"], "transition") if "transition" in d else base.transition
  initial = numpy.array(_parse_vector(d["initial"], "initial")) if "initial" in d else base.initial
  step_ms = d.get("step_ms", base.step_ms)
  return GroundTruthProcess(transition=transition, initial=initial, step_ms=step_ms)


def sample_trajectory(process: GroundTruthProcess, ticks: int, rng: XorShift64Star) -> Tuple[EmotionLabel, ...]:
  assert ticks >= 1
  current = process.sample_initial(rng)
  res = [current]
  for _ in range(ticks - 1):
    current = process.sample_next(current, rng)
    res.append(current)
  return tuple(res)
