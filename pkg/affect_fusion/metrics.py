
"""
Confusion matrices over any label space, and the metrics derived from them.

Orientation: rows are predicted labels, columns are actual labels.
So ``counts[p, a]`` is the number of samples with actual label a which were predicted as p.

Metrics which would divide by zero are undefined and reported as None
(never 0.0, never NaN), and they are excluded from the macro averages.

Matrices form a commutative monoid under :func:`merge` with the zero matrix as identity,
so shards can be evaluated independently and merged in any order.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union
import numpy
from .errors import ConfigError, EmptyMatrix, SpaceMismatch, UnknownLabel
from .taxonomy import CueKind, CueLabel, EmotionLabel, render_label

_Label = Union[str, EmotionLabel, CueKind, CueLabel]


class ConfusionMatrix:
  """
  :param label_space: ordered labels (any space). Stored as canonical strings.
  """

  def __init__(self, label_space: Sequence[_Label], counts: Optional[numpy.ndarray] = None):
    self.label_space = tuple(render_label(label) for label in label_space)  # type: Tuple[str, ...]
    assert len(set(self.label_space)) == len(self.label_space), f"duplicate labels in {self.label_space}"
    self._index = {label: i for i, label in enumerate(self.label_space)}
    n = len(self.label_space)
    if counts is None:
      counts = numpy.zeros((n, n), dtype="int64")
    else:
      counts = numpy.array(counts, dtype="int64")
    assert counts.shape == (n, n), f"counts shape {counts.shape} does not match {n} labels"
    assert (counts >= 0).all(), "negative counts"
    self.counts = counts

  @classmethod
  def zeros(cls, label_space: Sequence[_Label]) -> ConfusionMatrix:
    return cls(label_space)

  @classmethod
  def from_events(cls, label_space: Sequence[_Label], events: Iterable[Tuple[_Label, _Label]]) -> ConfusionMatrix:
    """
    :param events: (predicted, actual) pairs
    """
    m = cls(label_space)
    for predicted, actual in events:
      m.record(predicted, actual)
    return m

  def __repr__(self):
    return f"<{self.__class__.__name__} {self.label_space} total={self.total}>"

  def __eq__(self, other):
    if not isinstance(other, ConfusionMatrix):
      return NotImplemented
    return self.label_space == other.label_space and numpy.array_equal(self.counts, other.counts)

  __hash__ = None  # mutable

  def copy(self) -> ConfusionMatrix:
    return ConfusionMatrix(self.label_space, self.counts.copy())

  def index_of(self, label: _Label) -> int:
    name = render_label(label)
    if name not in self._index:
      raise UnknownLabel(f"{name!r} not in label space {self.label_space}")
    return self._index[name]

  def record(self, predicted: _Label, actual: _Label) -> ConfusionMatrix:
    """
    Increments exactly one cell. Inplace.

    :return: self
    """
    p, a = self.index_of(predicted), self.index_of(actual)
    self.counts[p, a] += 1
    return self

  @property
  def total(self) -> int:
    return int(self.counts.sum())

  @property
  def trace(self) -> int:
    return int(numpy.trace(self.counts))

  def cell(self, predicted: _Label, actual: _Label) -> int:
    return int(self.counts[self.index_of(predicted), self.index_of(actual)])

  def conditional_on_actual(self) -> numpy.ndarray:
    """
    :return: float matrix (actual, predicted), row a is P(predicted | actual).
      Rows of actual labels without samples are uniform.
      Useful to drive the simulator from a measured classifier.
    """
    by_actual = self.counts.T.astype("float64")
    res = numpy.empty_like(by_actual)
    for a in range(len(self.label_space)):
      row_sum = by_actual[a].sum()
      if row_sum > 0:
        res[a] = by_actual[a] / row_sum
      else:
        res[a] = 1. / len(self.label_space)
    return res

  def to_json_dict(self) -> Dict[str, Any]:
    return {"label_space": list(self.label_space), "counts": self.counts.tolist()}

  @classmethod
  def from_json_dict(cls, d: Any) -> ConfusionMatrix:
    if not isinstance(d, dict) or set(d.keys()) != {"label_space", "counts"}:
      raise ConfigError("confusion matrix must be an object with keys label_space and counts")
    space, counts = d["label_space"], d["counts"]
    if not isinstance(space, list) or not all(isinstance(x, str) for x in space):
      raise ConfigError("label_space must be an array of strings")
    n = len(space)
    if (not isinstance(counts, list) or len(counts) != n or
            not all(isinstance(row, list) and len(row) == n for row in counts) or
            not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for row in counts for c in row)):
      raise ConfigError(f"counts must be a {n}x{n} array of non-negative integers")
    return cls(space, numpy.array(counts, dtype="int64").reshape((n, n)))

  def render_text(self, *, title: Optional[str] = None) -> str:
    """
    Rows predicted, columns actual, in label order.
    """
    corner = "pred\\actual"
    width = max([len(corner)] + [len(label) for label in self.label_space] + [len(str(self.counts.max(initial=0)))])
    lines = []
    if title:
      lines.append(title)
    lines.append("  ".join([corner.ljust(width)] + [label.rjust(width) for label in self.label_space]))
    for i, label in enumerate(self.label_space):
      lines.append("  ".join([label.ljust(width)] + [str(int(c)).rjust(width) for c in self.counts[i]]))
    return "\n".join(lines) + "\n"


def record(matrix: ConfusionMatrix, predicted: _Label, actual: _Label) -> ConfusionMatrix:
  return matrix.record(predicted, actual)


def merge(a: ConfusionMatrix, b: ConfusionMatrix) -> ConfusionMatrix:
  """
  Element-wise sum, as a new matrix.

  :raises SpaceMismatch:
  """
  if a.label_space != b.label_space:
    raise SpaceMismatch(f"cannot merge label spaces {a.label_space} and {b.label_space}")
  return ConfusionMatrix(a.label_space, a.counts + b.counts)


def merge_all(label_space: Sequence[_Label], matrices: Iterable[ConfusionMatrix]) -> ConfusionMatrix:
  res = ConfusionMatrix.zeros(label_space)
  for m in matrices:
    res = merge(res, m)
  return res


@dataclass(frozen=True)
class Summary:
  """
  Per-class metrics map label -> value, None where undefined (0/0).
  Macro averages are over the defined classes only, None if there is none.
  """
  total: int
  accuracy: float
  precision: Mapping[str, Optional[float]]
  recall: Mapping[str, Optional[float]]
  f1: Mapping[str, Optional[float]]
  macro_precision: Optional[float]
  macro_recall: Optional[float]
  macro_f1: Optional[float]

  def to_json_dict(self) -> Dict[str, Any]:
    return {
      "total": self.total,
      "accuracy": self.accuracy,
      "precision": dict(self.precision),
      "recall": dict(self.recall),
      "f1": dict(self.f1),
      "macro_precision": self.macro_precision,
      "macro_recall": self.macro_recall,
      "macro_f1": self.macro_f1,
    }

  def render_text(self) -> str:
    def _fmt(x: Optional[float]) -> str:
      return "n/a" if x is None else f"{x:.4f}"

    labels = list(self.precision.keys())
    width = max([len("label")] + [len(label) for label in labels])
    lines = [f"accuracy {self.accuracy:.4f} ({self.total} samples)"]
    lines.append(f"{'label'.ljust(width)}  precision     recall         f1")
    for label in labels:
      lines.append(
        f"{label.ljust(width)}  {_fmt(self.precision[label]):>9}  {_fmt(self.recall[label]):>9}"
        f"  {_fmt(self.f1[label]):>9}")
    lines.append(
      f"{'macro'.ljust(width)}  {_fmt(self.macro_precision):>9}  {_fmt(self.macro_recall):>9}"
      f"  {_fmt(self.macro_f1):>9}")
    return "\n".join(lines) + "\n"


def _ratio(num: int, den: int) -> Optional[float]:
  if den == 0:
    return None
  return num / den


def _mean_defined(values: Iterable[Optional[float]]) -> Optional[float]:
  defined = [v for v in values if v is not None]
  if not defined:
    return None
  return sum(defined) / len(defined)


def summarize(matrix: ConfusionMatrix) -> Summary:
  """
  accuracy = trace / total; precision(c) = cell[c][c] / row sum (predicted c);
  recall(c) = cell[c][c] / column sum (actual c); F1 the harmonic mean of both.

  :raises EmptyMatrix: if there are no counts at all
  """
  total = matrix.total
  if total == 0:
    raise EmptyMatrix(f"no samples in confusion matrix over {matrix.label_space}")
  counts = matrix.counts
  precision, recall, f1 = {}, {}, {}
  for i, label in enumerate(matrix.label_space):
    tp = int(counts[i, i])
    p = _ratio(tp, int(counts[i, :].sum()))
    r = _ratio(tp, int(counts[:, i].sum()))
    precision[label] = p
    recall[label] = r
    if p is None or r is None:
      f1[label] = None
    elif p + r == 0.:
      f1[label] = 0.
    else:
      f1[label] = 2. * p * r / (p + r)
  return Summary(
    total=total,
    accuracy=matrix.trace / total,
    precision=precision, recall=recall, f1=f1,
    macro_precision=_mean_defined(precision.values()),
    macro_recall=_mean_defined(recall.values()),
    macro_f1=_mean_defined(f1.values()))
