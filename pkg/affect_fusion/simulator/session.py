
"""
Synthetic classroom sessions: per student a ground-truth trajectory and the noisy cue observations.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple
from ..errors import ConfigError, Finding, MalformedInput, UnknownLabel, raise_on_findings
from ..log import print_log
from ..mapping import MappingTable
from ..taxonomy import Cues, EmotionLabel, Observation, parse_emotion
from .emission import EmissionModel, default_emission, emit, emission_from_json_dict, validate_emission
from .process import GroundTruthProcess, default_process, process_from_json_dict, sample_trajectory, validate_process
from .rng import XorShift64Star, derive_seed

DefaultSeed = 7


@dataclass(frozen=True)
class SimulationParams:
  students: int = 50
  ticks: int = 200
  seed: int = DefaultSeed
  process: GroundTruthProcess = field(default_factory=default_process)
  emission: EmissionModel = field(default_factory=default_emission)

  @classmethod
  def from_json_dict(cls, d: Any, *, base: Optional[SimulationParams] = None) -> SimulationParams:
    """
    :param d: keys students, ticks, seed, transition, initial, step_ms, emission, dropout.
      Omitted keys are taken from base.
    """
    if base is None:
      base = cls()
    if not isinstance(d, dict):
      raise ConfigError(f"simulation params must be a JSON object, got {type(d).__name__}")
    unknown = set(d.keys()) - {"students", "ticks", "seed", "transition", "initial", "step_ms", "emission", "dropout"}
    if unknown:
      raise ConfigError(f"simulation params: unknown keys {sorted(unknown)}")
    for key in ("students", "ticks", "seed"):
      if key in d and (isinstance(d[key], bool) or not isinstance(d[key], int)):
        raise ConfigError(f"{key} must be an integer, got {d[key]!r}")
    process = process_from_json_dict(
      {k: d[k] for k in ("transition", "initial", "step_ms") if k in d}, base=base.process)
    emission = emission_from_json_dict(d.get("emission"), d.get("dropout"), base=base.emission)
    return cls(
      students=d.get("students", base.students), ticks=d.get("ticks", base.ticks), seed=d.get("seed", base.seed),
      process=process, emission=emission)

  def to_json_dict(self) -> Dict[str, Any]:
    d = {"students": self.students, "ticks": self.ticks, "seed": self.seed}
    d.update(self.process.to_json_dict())
    d.update(self.emission.to_json_dict())
    return d

  def with_overrides(self, *, students: Optional[int] = None, ticks: Optional[int] = None,
                     seed: Optional[int] = None) -> SimulationParams:
    return SimulationParams(
      students=self.students if students is None else students,
      ticks=self.ticks if ticks is None else ticks,
      seed=self.seed if seed is None else seed,
      process=self.process, emission=self.emission)


def validate_simulation_params(params: SimulationParams) -> List[Finding]:
  findings = []
  for key in ("students", "ticks"):
    value = getattr(params, key)
    if value < 1:
      findings.append(Finding("out of range", key, f"must be >= 1, got {value}"))
  if not 0 <= params.seed < (1 << 64):
    findings.append(Finding("out of range", "seed", f"must be an unsigned 64-bit integer, got {params.seed}"))
  findings.extend(validate_process(params.process))
  findings.extend(validate_emission(params.emission))
  return findings


def check_simulation_params(params: SimulationParams):
  raise_on_findings("simulation params", validate_simulation_params(params))


def student_ids(students: int) -> Tuple[str, ...]:
  """
  Zero-padded, so lexicographic order is index order.
  """
  width = max(3, len(str(students - 1)))
  return tuple(f"s{idx:0{width}d}" for idx in range(students))


@dataclass(frozen=True)
class SimulatedSession:
  """
  :param seed: None if the session was loaded from files
  :param ground_truth: student -> emotion per tick
  :param observations: ordered by tick, then student, then cue
  """
  seed: Optional[int]
  student_ids: Tuple[str, ...]
  ticks: int
  step_ms: int
  ground_truth: Mapping[str, Tuple[EmotionLabel, ...]]
  observations: Tuple[Observation, ...]

  def __post_init__(self):
    object.__setattr__(self, "ground_truth", MappingProxyType(dict(self.ground_truth)))

  @property
  def students(self) -> int:
    return len(self.student_ids)

  def tick_timestamp(self, tick: int) -> int:
    """
    Midpoint of the tick's window.
    """
    return tick * self.step_ms + self.step_ms // 2

  def window_start(self, tick: int) -> int:
    return tick * self.step_ms


def generate(students: int, ticks: int, process: GroundTruthProcess, model: EmissionModel, table: MappingTable,
             seed: int = DefaultSeed) -> SimulatedSession:
  """
  Student ``idx`` draws from its own generator seeded with ``derive_seed(seed, idx)``:
  first its whole trajectory, then per tick one emission attempt per cue, in cue order.
  """
  assert students >= 1 and ticks >= 1
  ids = student_ids(students)
  ground_truth = {}
  per_student = []  # type: List[List[Tuple[Observation, ...]]]
  for idx, student in enumerate(ids):
    rng = XorShift64Star(derive_seed(seed, idx))
    trajectory = sample_trajectory(process, ticks, rng)
    ground_truth[student] = trajectory
    per_tick = []
    for tick, emotion in enumerate(trajectory):
      ts = tick * process.step_ms + process.step_ms // 2
      emitted = []
      for cue in Cues:
        obs = emit(emotion, cue, model, table, rng, timestamp=ts, student_id=student)
        if obs is not None:
          emitted.append(obs)
      per_tick.append(tuple(emitted))
    per_student.append(per_tick)
  observations = tuple(obs for tick in range(ticks) for s in range(students) for obs in per_student[s][tick])
  print_log(2, f"simulator: {students} students x {ticks} ticks, seed {seed}, {len(observations)} observations")
  return SimulatedSession(
    seed=seed, student_ids=ids, ticks=ticks, step_ms=process.step_ms,
    ground_truth=ground_truth, observations=observations)


def generate_from_params(params: SimulationParams, table: MappingTable) -> SimulatedSession:
  check_simulation_params(params)
  return generate(params.students, params.ticks, params.process, params.emission, table, params.seed)


def ground_truth_records(session: SimulatedSession) -> List[Dict[str, Any]]:
  """
  One record per tick and student, same order as the observations.
  """
  return [
    {"ts": session.tick_timestamp(tick), "student": student, "emotion": session.ground_truth[student][tick].value}
    for tick in range(session.ticks) for student in session.student_ids]


def session_from_records(observations: Sequence[Observation], truth_records: Iterable[Tuple[int, Any]],
                         *, step_ms: int) -> SimulatedSession:
  """
  Inverse of the session export.

  :param truth_records: (line number, JSON object with ts, student, emotion)
  :param step_ms: tick duration, ts // step_ms is the tick
  :raises MalformedInput: on a bad ground-truth line
  :raises ConfigError: if ticks are missing or an observation's student has no ground truth.
    Also if there are no records at all.
  """
  per_student = {}  # type: Dict[str, Dict[int, EmotionLabel]]
  for line_no, d in truth_records:
    if not isinstance(d, dict) or set(d.keys()) != {"ts", "student", "emotion"}:
      raise MalformedInput(line_no, "ground truth must be an object with keys ts, student, emotion")
    ts, student = d["ts"], d["student"]
    if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
      raise MalformedInput(line_no, f"ts must be a non-negative integer, got {ts!r}")
    if not isinstance(student, str) or not student:
      raise MalformedInput(line_no, f"student must be a non-empty string, got {student!r}")
    try:
      emotion = parse_emotion(d["emotion"]) if isinstance(d["emotion"], str) else None
    except UnknownLabel as exc:
      raise MalformedInput(line_no, str(exc))
    if emotion is None:
      raise MalformedInput(line_no, f"emotion must be a string, got {d['emotion']!r}")
    tick = ts // step_ms
    if tick in per_student.setdefault(student, {}):
      raise MalformedInput(line_no, f"duplicate ground truth for student {student!r} at tick {tick}")
    per_student[student][tick] = emotion
  if not per_student:
    raise ConfigError("ground truth file has no records")
  ticks = max((max(by_tick) + 1 for by_tick in per_student.values()), default=0)
  for student in sorted(per_student):
    missing = [t for t in range(ticks) if t not in per_student[student]]
    if missing:
      raise ConfigError(f"ground truth of student {student!r} misses ticks {missing[:5]}")
  for obs in observations:
    if obs.student_id not in per_student:
      raise ConfigError(f"student {obs.student_id!r} has observations but no ground truth")
    if obs.timestamp // step_ms >= ticks:
      raise ConfigError(f"observation of student {obs.student_id!r} at ts {obs.timestamp} is after the last tick")
  ids = tuple(sorted(per_student))
  return SimulatedSession(
    seed=None, student_ids=ids, ticks=ticks, step_ms=step_ms,
    ground_truth={s: tuple(per_student[s][t] for t in range(ticks)) for s in ids},
    observations=tuple(observations))
