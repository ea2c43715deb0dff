
import _setup_test_env  # noqa
import sys
import unittest
import numpy
import pytest
from affect_fusion.errors import ConfigError, EmptyMatrix, SpaceMismatch, UnknownLabel
from affect_fusion.metrics import ConfusionMatrix, merge, merge_all, record, summarize
from affect_fusion.taxonomy import CueKind, EmotionLabel, Emotions, label_space

PostureSpace = label_space(CueKind.POSTURE)


def _slouching_fixture() -> ConfusionMatrix:
  m = ConfusionMatrix.zeros(PostureSpace)
  for _ in range(250):
    record(m, "slouching", "slouching")
  record(m, "writing", "slouching")
  return m


def test_record_slouching_fixture():
  m = _slouching_fixture()
  assert m.cell("slouching", "slouching") == 250
  assert m.cell("writing", "slouching") == 1
  assert m.total == 251


def test_summarize_slouching_recall():
  s = summarize(_slouching_fixture())
  assert s.recall["slouching"] == 250 / 251
  assert s.precision["slouching"] == 1.
  assert s.precision["writing"] == 0.
  # no actual writing and nothing predicted as upright
  assert s.recall["writing"] is None
  assert s.precision["upright"] is None and s.recall["upright"] is None
  assert s.f1["writing"] is None
  assert s.macro_recall == 250 / 251
  assert s.macro_precision == 0.5


def test_record_single_off_diagonal():
  m = ConfusionMatrix.zeros(Emotions).record(EmotionLabel.INTERESTED, EmotionLabel.BORED)
  assert m.total == 1 and m.trace == 0
  assert m.counts[EmotionLabel.INTERESTED.index, EmotionLabel.BORED.index] == 1


def test_record_unknown_label():
  with pytest.raises(UnknownLabel):
    ConfusionMatrix.zeros(Emotions).record("happy", "bored")


def test_summarize_identity():
  m = ConfusionMatrix(["a", "b", "c"], numpy.diag([3, 1, 2]))
  s = summarize(m)
  assert s.accuracy == 1.
  assert all(v == 1. for v in s.precision.values())
  assert all(v == 1. for v in s.recall.values())
  assert s.macro_f1 == 1.


def test_summarize_two_labels():
  m = ConfusionMatrix(["x", "y"], [[2, 1], [0, 3]])
  s = summarize(m)
  assert s.accuracy == 5 / 6
  assert s.precision == {"x": 2 / 3, "y": 1.}
  assert s.recall == {"x": 1., "y": 3 / 4}
  events = [("x", "x")] * 2 + [("x", "y")] + [("y", "y")] * 3
  assert ConfusionMatrix.from_events(["x", "y"], events) == m


def test_summarize_f1_zero_when_both_zero():
  m = ConfusionMatrix(["x", "y"], [[0, 1], [1, 0]])
  s = summarize(m)
  assert s.precision == {"x": 0., "y": 0.}
  assert s.f1 == {"x": 0., "y": 0.}
  assert s.accuracy == 0.


def test_summarize_empty():
  with pytest.raises(EmptyMatrix):
    summarize(ConfusionMatrix.zeros(Emotions))


def test_merge_space_mismatch():
  with pytest.raises(SpaceMismatch):
    merge(ConfusionMatrix.zeros(Emotions), ConfusionMatrix.zeros(PostureSpace))


def test_merge_identity():
  m = _slouching_fixture()
  assert merge(m, ConfusionMatrix.zeros(PostureSpace)) == m
  assert merge(ConfusionMatrix.zeros(PostureSpace), m) == m


def _random_matrix(rnd: numpy.random.RandomState, space) -> ConfusionMatrix:
  n = len(space)
  return ConfusionMatrix(space, rnd.randint(0, 20, size=(n, n)))


def test_merge_monoid_random():
  rnd = numpy.random.RandomState(42)
  for _ in range(500):
    a, b, c = (_random_matrix(rnd, Emotions) for _ in range(3))
    assert merge(a, b) == merge(b, a)
    assert merge(merge(a, b), c) == merge(a, merge(b, c))
    assert merge(a, ConfusionMatrix.zeros(Emotions)) == a


def test_merged_shards_equal_concatenated_events():
  rnd = numpy.random.RandomState(43)
  for _ in range(500):
    n_events = rnd.randint(1, 100)
    events = [(Emotions[rnd.randint(5)], Emotions[rnd.randint(5)]) for _ in range(n_events)]
    split = rnd.randint(0, n_events + 1)
    shards = [
      ConfusionMatrix.from_events(Emotions, events[:split]), ConfusionMatrix.from_events(Emotions, events[split:])]
    merged = merge_all(Emotions, shards)
    full = ConfusionMatrix.from_events(Emotions, events)
    assert merged == full
    assert summarize(merged) == summarize(full)
    shuffled = [events[i] for i in rnd.permutation(n_events)]
    assert summarize(ConfusionMatrix.from_events(Emotions, shuffled)) == summarize(full)


def test_merge_does_not_modify_inputs():
  a = _slouching_fixture()
  before = a.copy()
  merge(a, a)
  assert a == before


def test_json_round_trip():
  m = _slouching_fixture()
  d = m.to_json_dict()
  assert d["label_space"] == ["slouching", "upright", "writing"]
  assert d["counts"] == [[250, 0, 0], [0, 0, 0], [1, 0, 0]]
  assert ConfusionMatrix.from_json_dict(d) == m
  with pytest.raises(ConfigError):
    ConfusionMatrix.from_json_dict({"label_space": ["a"], "counts": [[-1]]})
  with pytest.raises(ConfigError):
    ConfusionMatrix.from_json_dict({"label_space": ["a", "b"], "counts": [[1, 2]]})


def test_render_text():
  lines = _slouching_fixture().render_text(title="posture").splitlines()
  assert lines[0] == "posture"
  assert lines[1].split() == ["pred\\actual", "slouching", "upright", "writing"]
  assert lines[2].split() == ["slouching", "250", "0", "0"]
  assert lines[4].split() == ["writing", "1", "0", "0"]


def test_conditional_on_actual():
  p = _slouching_fixture().conditional_on_actual()
  assert p.shape == (3, 3)
  assert p[0].tolist() == [250 / 251, 0., 1 / 251]
  assert p[1].tolist() == [1 / 3] * 3
  assert numpy.allclose(p.sum(axis=1), 1.)


def test_summary_json_and_text():
  s = summarize(_slouching_fixture())
  d = s.to_json_dict()
  assert d["recall"]["upright"] is None
  assert d["total"] == 251
  text = s.render_text()
  assert "n/a" in text
  assert text.startswith("accuracy 0.9960 (251 samples)")


if __name__ == "__main__":
  if len(sys.argv) <= 1:
    for k, v in sorted(globals().items()):
      if k.startswith("test_"):
        print("-" * 40)
        print("Executing: %s" % k)
        try:
          v()
        except unittest.SkipTest as exc:
          print("SkipTest:", exc)
        print("-" * 40)
    print("Finished all tests.")
  else:
    assert len(sys.argv) >= 2
    for arg in sys.argv[1:]:
      print("Executing: %s" % arg)
      if arg in globals():
        globals()[arg]()  # assume function and execute
      else:
        eval(arg)  # assume Python code and execute
