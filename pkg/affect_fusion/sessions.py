
"""
From a raw observation stream to per-student fused timelines and classroom rollups.

Windows are ``[start, start + width)`` with starts on a grid of multiples of the stride.
Each student's grid begins at their first observation, floored to a multiple of the stride,
and runs up to the window starting at or before their last observation.
Windows on that range without any observation are kept as no-evidence entries.
Tumbling windows have ``stride == width``, sliding windows ``stride < width``.

Within a window, each cue is represented by its modal label
(ties: the label observed most recently), and these are fused.
With ``soft=True``, the per-cue confidence distributions are averaged instead
(an observation without confidence counts as one-hot).
"""

from __future__ import annotations
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple
from .errors import ConfigError, InsufficientCues, UnsortedInput
from .fusion import EmotionScores, FusionConfig, accumulate_scores, decide, fuse_distributions
from .mapping import MappingTable
from .taxonomy import CueKind, CueLabel, Cues, EmotionLabel, Emotions, Observation, parse_emotion


DefaultWindowMs = 5000
DefaultEngaged = frozenset({EmotionLabel.INTERESTED, EmotionLabel.NEUTRAL})


@dataclass(frozen=True)
class WindowSpec:
  width_ms: int = DefaultWindowMs
  stride_ms: int = DefaultWindowMs

  def __post_init__(self):
    for name in ("width_ms", "stride_ms"):
      value = getattr(self, name)
      if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ConfigError(f"window {name} must be a positive integer, got {value!r}")
    if self.stride_ms > self.width_ms:
      raise ConfigError(f"window stride {self.stride_ms} must not exceed width {self.width_ms}")

  @property
  def is_tumbling(self) -> bool:
    return self.stride_ms == self.width_ms

  def grid_origin(self, timestamp: int) -> int:
    return timestamp // self.stride_ms * self.stride_ms

  def window_starts(self, timestamp: int, origin: int) -> range:
    """
    :return: starts of all windows on the grid beginning at origin which contain timestamp
    """
    assert origin <= timestamp and origin % self.stride_ms == 0
    k_max = (timestamp - origin) // self.stride_ms
    k_min = max(0, -(-(timestamp - origin - self.width_ms + 1) // self.stride_ms))
    return range(origin + k_min * self.stride_ms, origin + (k_max + 1) * self.stride_ms, self.stride_ms)


WindowGroup = Tuple[int, Tuple[Observation, ...]]


def _check_sorted(observations: Sequence[Observation]):
  for i in range(1, len(observations)):
    if observations[i].timestamp < observations[i - 1].timestamp:
      raise UnsortedInput(i, observations[i].timestamp, observations[i - 1].timestamp)


def window_stream(observations: Sequence[Observation], spec: WindowSpec) -> Dict[str, List[WindowGroup]]:
  """
  :param observations: sorted by timestamp. Unsorted input is an error, we never re-sort.
  :return: student id (sorted) -> list of (window start, observations in that window, in input order)
  :raises UnsortedInput:
  """
  _check_sorted(observations)
  origins = {}  # type: Dict[str, int]
  last_ts = {}  # type: Dict[str, int]
  windows = defaultdict(lambda: defaultdict(list))  # student -> start -> obs list
  for obs in observations:
    student = obs.student_id
    if student not in origins:
      origins[student] = spec.grid_origin(obs.timestamp)
    last_ts[student] = obs.timestamp
    for start in spec.window_starts(obs.timestamp, origins[student]):
      windows[student][start].append(obs)
  res = {}
  for student in sorted(origins):
    last_start = spec.grid_origin(last_ts[student])
    res[student] = [
      (start, tuple(windows[student].get(start, ())))
      for start in range(origins[student], last_start + 1, spec.stride_ms)]
  return res


def representative_per_cue(window_observations: Iterable[Observation]) -> Dict[CueKind, CueLabel]:
  """
  Per cue, the modal label. Frequency ties go to the tied label seen with the latest timestamp
  (and among equal timestamps, the later one in the input).
  Cues without observations are absent from the result.
  """
  stats = {}  # type: Dict[CueKind, Dict[CueLabel, Tuple[int, int, int]]]
  for pos, obs in enumerate(window_observations):
    per_label = stats.setdefault(obs.cue, {})
    count, _, _ = per_label.get(obs.label, (0, 0, 0))
    per_label[obs.label] = (count + 1, obs.timestamp, pos)
  res = {}
  for cue in Cues:
    if cue in stats:
      per_label = stats[cue]
      res[cue] = max(per_label, key=lambda label: per_label[label])
  return res


def window_distributions(window_observations: Iterable[Observation]) -> Dict[CueKind, Tuple[float, ...]]:
  """
  Per cue, the mean of the observations' distributions (one-hot if no confidence was given).
  """
  sums = {}  # type: Dict[CueKind, List[float]]
  counts = defaultdict(int)
  for obs in window_observations:
    dist = obs.distribution()
    acc = sums.setdefault(obs.cue, [0.] * len(dist))
    for j, p in enumerate(dist):
      acc[j] += p
    counts[obs.cue] += 1
  return {cue: tuple(p / counts[cue] for p in sums[cue]) for cue in Cues if cue in sums}


@dataclass(frozen=True)
class TimelineEntry:
  """
  :param emotion: the fused emotion, or None for no evidence
  :param status: "ok", "no_evidence" (no observation in the window),
    or "insufficient_cues" (missing-cue policy require(k) not met)
  """
  window_start: int
  emotion: Optional[EmotionLabel]
  scores: EmotionScores
  status: str = "ok"

  @property
  def has_evidence(self) -> bool:
    return self.emotion is not None


@dataclass(frozen=True)
class StudentTimeline:
  student_id: str
  entries: Tuple[TimelineEntry, ...]

  def decision_at(self, window_start: int) -> Optional[TimelineEntry]:
    for entry in self.entries:
      if entry.window_start == window_start:
        return entry
    return None


def fuse_window(window_start: int, window_observations: Sequence[Observation],
                config: FusionConfig, table: MappingTable, *, soft: bool = False) -> TimelineEntry:
  try:
    if soft:
      scores = fuse_distributions(window_distributions(window_observations), config, table)
    else:
      scores = accumulate_scores(representative_per_cue(window_observations), config, table)
  except InsufficientCues:
    return TimelineEntry(window_start, None, EmotionScores.zeros(), "insufficient_cues")
  if not scores.has_evidence:
    return TimelineEntry(window_start, None, scores, "no_evidence")
  return TimelineEntry(window_start, decide(scores, config.tie_break), scores, "ok")


def fuse_log(observations: Sequence[Observation], spec: WindowSpec,
             config: FusionConfig, table: MappingTable, *, soft: bool = False) -> List[StudentTimeline]:
  """
  Batch path: window the full sorted log, then fuse every window.

  :return: timelines ordered by student id
  """
  groups = window_stream(observations, spec)
  return [
    StudentTimeline(student, tuple(fuse_window(start, obs, config, table, soft=soft) for start, obs in windows))
    for student, windows in groups.items()]


class _StudentState:
  def __init__(self, origin: int):
    self.next_start = origin
    self.last_ts = origin
    self.buffer = []  # type: List[Observation]
    self.entries = []  # type: List[TimelineEntry]


class StreamingFuser:
  """
  Incremental path: push observations one by one (sorted by timestamp);
  a window is fused as soon as the stream has passed its end.
  Yields exactly the same timelines as :func:`fuse_log` on the full log.
  """

  def __init__(self, spec: WindowSpec, config: FusionConfig, table: MappingTable, *, soft: bool = False):
    self.spec = spec
    self.config = config
    self.table = table
    self.soft = soft
    self._students = {}  # type: Dict[str, _StudentState]
    self._watermark = None  # type: Optional[int]
    self._count = 0

  def push(self, obs: Observation) -> List[Tuple[str, TimelineEntry]]:
    """
    :return: newly closed (student, entry) pairs
    :raises UnsortedInput:
    """
    if self._watermark is not None and obs.timestamp < self._watermark:
      raise UnsortedInput(self._count, obs.timestamp, self._watermark)
    self._count += 1
    self._watermark = obs.timestamp
    state = self._students.get(obs.student_id)
    if state is None:
      state = self._students[obs.student_id] = _StudentState(self.spec.grid_origin(obs.timestamp))
    state.buffer.append(obs)
    state.last_ts = obs.timestamp
    return self._flush(limit=obs.timestamp)

  def finish(self) -> List[Tuple[str, TimelineEntry]]:
    """
    End of stream: fuse all remaining windows.
    """
    return self._flush(limit=None)

  def _flush(self, limit: Optional[int]) -> List[Tuple[str, TimelineEntry]]:
    width, stride = self.spec.width_ms, self.spec.stride_ms
    closed = []
    for student in sorted(self._students):
      state = self._students[student]
      last_start = self.spec.grid_origin(state.last_ts)
      while state.next_start <= last_start and (limit is None or state.next_start + width <= limit):
        start = state.next_start
        window_obs = [obs for obs in state.buffer if start <= obs.timestamp < start + width]
        entry = fuse_window(start, window_obs, self.config, self.table, soft=self.soft)
        state.entries.append(entry)
        closed.append((student, entry))
        state.next_start += stride
        state.buffer = [obs for obs in state.buffer if obs.timestamp >= state.next_start]
    return closed

  def timelines(self) -> List[StudentTimeline]:
    """
    Everything fused so far, ordered by student id.
    """
    return [StudentTimeline(student, tuple(self._students[student].entries)) for student in sorted(self._students)]


@dataclass(frozen=True)
class ClassroomReport:
  """
  :param counts: per emotion, number of students whose fused emotion it is
  :param engagement_fraction: engaged students / students with evidence, 0 if none has evidence
  """
  window_start: int
  counts: Mapping[EmotionLabel, int]
  engagement_fraction: float
  no_evidence_count: int

  @property
  def students_with_evidence(self) -> int:
    return sum(self.counts.values())

  @property
  def students(self) -> int:
    return self.students_with_evidence + self.no_evidence_count


def classroom_rollup(window_start: int, decisions: Mapping[str, Optional[EmotionLabel]], *,
                     engaged: FrozenSet[EmotionLabel] = DefaultEngaged) -> ClassroomReport:
  """
  :param decisions: student -> fused emotion, None for no evidence. All for the same window.
  """
  counts = {e: 0 for e in Emotions}
  no_evidence = 0
  for emotion in decisions.values():
    if emotion is None:
      no_evidence += 1
    else:
      counts[emotion] += 1
  with_evidence = sum(counts.values())
  engaged_count = sum(counts[e] for e in engaged)
  fraction = engaged_count / with_evidence if with_evidence else 0.
  return ClassroomReport(window_start, counts, fraction, no_evidence)


def rollup_timelines(timelines: Iterable[StudentTimeline], *,
                     engaged: FrozenSet[EmotionLabel] = DefaultEngaged) -> List[ClassroomReport]:
  """
  :return: one report per window start seen in any timeline, ascending
  """
  per_window = defaultdict(dict)  # type: Dict[int, Dict[str, Optional[EmotionLabel]]]
  for timeline in timelines:
    for entry in timeline.entries:
      per_window[entry.window_start][timeline.student_id] = entry.emotion
  return [classroom_rollup(start, per_window[start], engaged=engaged) for start in sorted(per_window)]


def parse_engaged(text: str) -> FrozenSet[EmotionLabel]:
  """
  :param text: comma separated emotions, e.g. "interested,neutral"
  """
  return frozenset(parse_emotion(part.strip()) for part in text.split(",") if part.strip())


def timeline_entry_to_json_dict(student_id: str, entry: TimelineEntry) -> Dict[str, object]:
  return {
    "student": student_id,
    "window_start": entry.window_start,
    "emotion": entry.emotion.value if entry.emotion else None,
    "status": entry.status,
    "scores": entry.scores.as_dict(),
    "cues": [cue.value for cue in Cues if cue in entry.scores.contributing_cues],
  }


def timelines_to_json_records(timelines: Iterable[StudentTimeline]) -> List[Dict[str, object]]:
  return [
    timeline_entry_to_json_dict(timeline.student_id, entry)
    for timeline in timelines for entry in timeline.entries]


def rollup_to_json_dict(report: ClassroomReport) -> Dict[str, object]:
  return {
    "window_start": report.window_start,
    "counts": {e.value: report.counts[e] for e in Emotions},
    "engagement_fraction": report.engagement_fraction,
    "no_evidence_count": report.no_evidence_count,
  }


def _render_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
  widths = [len(h) for h in header]
  for row in rows:
    widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
  lines = ["  ".join(cell.ljust(w) for cell, w in zip(header, widths)).rstrip()]
  lines.append("  ".join("-" * w for w in widths))
  for row in rows:
    lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
  return "\n".join(lines) + "\n"


def render_timelines_text(timelines: Iterable[StudentTimeline]) -> str:
  header = ["student", "window_start", "emotion"] + [e.value for e in Emotions] + ["cues"]
  rows = []
  for timeline in timelines:
    for entry in timeline.entries:
      rows.append(
        [timeline.student_id, str(entry.window_start), entry.emotion.value if entry.emotion else f"-({entry.status})"] +
        [f"{entry.scores[e]:.4f}" for e in Emotions] +
        [",".join(cue.value for cue in Cues if cue in entry.scores.contributing_cues) or "-"])
  return _render_table(header, rows)


def render_rollups_text(reports: Iterable[ClassroomReport]) -> str:
  header = ["window_start"] + [e.value for e in Emotions] + ["no_evidence", "engagement"]
  rows = [
    [str(r.window_start)] + [str(r.counts[e]) for e in Emotions] +
    [str(r.no_evidence_count), f"{r.engagement_fraction:.3f}"]
    for r in reports]
  return _render_table(header, rows)
