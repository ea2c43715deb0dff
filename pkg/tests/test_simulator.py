
import _setup_test_env  # noqa
import math
import os
import sys
import unittest
import numpy
import pytest
from affect_fusion.errors import ConfigError
from affect_fusion.fusion import default_config
from affect_fusion.mapping import default_mapping
from affect_fusion.metrics import ConfusionMatrix
from affect_fusion.serialization import read_json_file
from affect_fusion.simulator.emission import (
  EmissionModel, default_emission, emission_from_json_dict, emit, perfect_emission, svm_emission, validate_emission)
from affect_fusion.simulator.evaluate import evaluate
from affect_fusion.simulator.process import (
  GroundTruthProcess, default_process, process_from_json_dict, sample_trajectory, validate_process)
from affect_fusion.simulator.rng import SplitMix64, XorShift64Star, derive_seed, mix64
from affect_fusion.simulator.session import (
  SimulationParams, generate, ground_truth_records, session_from_records, student_ids, validate_simulation_params)
from affect_fusion.taxonomy import CueKind, CueLabel, Cues, EmotionLabel, Emotions

_root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

B, C, F, I, N = (
  EmotionLabel.BORED, EmotionLabel.CONFUSED, EmotionLabel.FRUSTRATED, EmotionLabel.INTERESTED, EmotionLabel.NEUTRAL)


def _no_dropout(model: EmissionModel) -> EmissionModel:
  return EmissionModel(accuracy=model.accuracy, dropout={cue: 0. for cue in Cues})


def _absorbing(emotion: EmotionLabel) -> GroundTruthProcess:
  initial = numpy.zeros(len(Emotions))
  initial[emotion.index] = 1.
  return GroundTruthProcess(transition=numpy.eye(len(Emotions)), initial=initial)


def test_splitmix64_reference_values():
  rng = SplitMix64(0)
  assert rng.next_u64() == 0xE220A8397B1DCDAF
  assert rng.next_u64() == 0x6E789E6AA1B965F4
  assert rng.next_u64() == 0x06C45D188009454F
  assert mix64(0) == 0


def test_xorshift_deterministic():
  a, b = XorShift64Star(123), XorShift64Star(123)
  assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]
  c = XorShift64Star(124)
  assert [a.next_u64() for _ in range(10)] != [c.next_u64() for _ in range(10)]
  assert derive_seed(7, 0) != derive_seed(7, 1)
  assert derive_seed(7, 0) == derive_seed(7, 0)


def test_xorshift_ranges():
  rng = XorShift64Star(1)
  for _ in range(10000):
    u = rng.uniform()
    assert 0. <= u < 1.
    assert 0 <= rng.below(3) < 3
    assert 0 <= rng.next_u64() < 2 ** 64
  counts = [0, 0, 0]
  for _ in range(30000):
    counts[rng.below(3)] += 1
  assert all(abs(c / 30000 - 1 / 3) < 0.015 for c in counts)


def test_categorical_skips_zero_mass():
  rng = XorShift64Star(5)
  for _ in range(1000):
    assert rng.categorical([0., 0.3, 0., 0.7, 0.]) in (1, 3)
    assert rng.categorical([0., 0., 1., 0., 0.]) == 2


def test_default_emission():
  model = default_emission()
  assert model.accuracy[CueKind.FACIAL] == 0.6507
  assert model.accuracy[CueKind.POSTURE] == 0.9596
  assert model.accuracy[CueKind.SPEECH] == 0.7315
  assert model.accuracy[CueKind.EYE] == 0.90
  assert model.dropout[CueKind.SPEECH] == 0.5
  assert all(model.dropout[cue] == 0.2 for cue in (CueKind.FACIAL, CueKind.EYE, CueKind.POSTURE))
  assert validate_emission(model) == []
  svm = svm_emission()
  assert svm.accuracy[CueKind.POSTURE] == 0.937 and svm.accuracy[CueKind.FACIAL] == 0.4232
  assert svm.dropout == model.dropout


def test_emit_perfect_accuracy():
  table, model, rng = default_mapping(), perfect_emission(), XorShift64Star(11)
  for _ in range(200):
    obs = emit(F, CueKind.FACIAL, model, table, rng, timestamp=2500, student_id="s000")
    assert obs.label == CueLabel(CueKind.FACIAL, "frustrated")
    assert obs.timestamp == 2500 and obs.student_id == "s000"
    assert emit(I, CueKind.EYE, model, table, rng).label == CueLabel(CueKind.EYE, "looking_at_screen")


def test_emit_empty_candidates_uniform():
  table, model, rng = default_mapping(), perfect_emission(), XorShift64Star(12)
  counts = {}
  for _ in range(30000):
    label = emit(C, CueKind.POSTURE, model, table, rng).label.label
    counts[label] = counts.get(label, 0) + 1
  assert set(counts) == {"slouching", "upright", "writing"}
  assert all(abs(c / 30000 - 1 / 3) < 0.015 for c in counts.values())


def test_emit_dropout():
  table, rng = default_mapping(), XorShift64Star(13)
  model = perfect_emission().with_cue(CueKind.SPEECH, dropout=1.)
  assert all(emit(B, CueKind.SPEECH, model, table, rng) is None for _ in range(100))
  assert all(emit(B, CueKind.FACIAL, model, table, rng) is not None for _ in range(100))


def test_emit_marginal_accuracy():
  table, rng = default_mapping(), XorShift64Star(14)
  a, n = 0.7, 100000
  model = perfect_emission().with_cue(CueKind.POSTURE, accuracy=a)
  hits = 0
  for _ in range(n):
    label = emit(I, CueKind.POSTURE, model, table, rng).label.label
    hits += label in ("upright", "writing")  # the candidates of interested
  sigma = math.sqrt(a * (1. - a) / n)
  assert abs(hits / n - a) < 3. * sigma


def test_emit_with_emission_matrix():
  table, rng = default_mapping(), XorShift64Star(15)
  measured = ConfusionMatrix.from_events(Emotions, [(e, e) for e in Emotions])
  model = EmissionModel(
    accuracy={cue: 1. for cue in Cues}, dropout={cue: 0. for cue in Cues},
    emission_matrices={CueKind.SPEECH: measured.conditional_on_actual()})
  assert validate_emission(model) == []
  for e in Emotions:
    assert emit(e, CueKind.SPEECH, model, table, rng).label.label == e.value


def test_validate_emission_findings():
  bad = default_emission().with_cue(CueKind.EYE, accuracy=1.5).with_cue(CueKind.SPEECH, dropout=-0.1)
  assert sorted(f.where for f in validate_emission(bad)) == ["dropout.speech", "emission.eye"]
  matrix = EmissionModel(
    accuracy={}, dropout=default_emission().dropout, emission_matrices={CueKind.EYE: numpy.full((5, 2), 0.6)})
  kinds = [f.kind for f in validate_emission(matrix)]
  assert kinds.count("not stochastic") == 5
  assert kinds.count("missing") == 3  # no accuracy for the other cues


def test_emission_from_json():
  model = emission_from_json_dict({"eye": 0.5, "speech": {"matrix": numpy.eye(5).tolist()}}, {"facial": 0.})
  assert model.accuracy[CueKind.EYE] == 0.5
  assert CueKind.SPEECH in model.emission_matrices
  assert model.dropout[CueKind.FACIAL] == 0.
  assert model.dropout[CueKind.SPEECH] == 0.5
  with pytest.raises(ConfigError):
    emission_from_json_dict({"gaze": 0.5}, None)
  with pytest.raises(ConfigError):
    emission_from_json_dict({"eye": "good"}, None)


def test_default_process():
  process = default_process()
  assert process.transition[0, 0] == 0.85
  assert process.transition[0, 1] == 0.0375
  assert process.initial.tolist() == [0.2] * 5
  assert process.step_ms == 5000
  assert validate_process(process) == []


def test_validate_process_names_row():
  transition = numpy.array(default_process().transition)
  transition[1, 1] = 0.5
  findings = validate_process(GroundTruthProcess(transition=transition, initial=default_process().initial))
  assert [f.where for f in findings] == ["transition row 1 (confused)"]
  with pytest.raises(ConfigError):
    process_from_json_dict({"transition": [[1., 0.]]})


def test_process_from_json_keyed_by_emotion():
  d = {
    "transition": {e.value: {e.value: 1.} for e in Emotions},
    "initial": {"bored": 1.},
  }
  process = process_from_json_dict(d)
  assert process == _absorbing(B)


def test_ground_truth_stationarity():
  rng = XorShift64Star(99)
  trajectory = sample_trajectory(default_process(), 100001, rng)
  n = len(trajectory) - 1
  stays = sum(1 for a, b in zip(trajectory, trajectory[1:]) if a == b)
  sigma = math.sqrt(0.85 * 0.15 / n)
  assert abs(stays / n - 0.85) < 3. * sigma


def test_student_ids_sort_by_index():
  assert student_ids(3) == ("s000", "s001", "s002")
  ids = student_ids(1500)
  assert ids[0] == "s0000" and list(ids) == sorted(ids)


def test_generate_deterministic():
  table = default_mapping()
  a = generate(5, 20, default_process(), default_emission(), table, seed=7)
  b = generate(5, 20, default_process(), default_emission(), table, seed=7)
  assert a.observations == b.observations
  assert dict(a.ground_truth) == dict(b.ground_truth)
  assert ground_truth_records(a) == ground_truth_records(b)
  c = generate(5, 20, default_process(), default_emission(), table, seed=8)
  assert c.observations != a.observations


def test_generate_layout():
  session = generate(3, 4, default_process(), default_emission(), default_mapping(), seed=1)
  assert session.student_ids == ("s000", "s001", "s002")
  assert all(len(session.ground_truth[s]) == 4 for s in session.student_ids)
  assert all(obs.timestamp % 5000 == 2500 for obs in session.observations)
  keys = [(obs.timestamp, obs.student_id, Cues.index(obs.cue)) for obs in session.observations]
  assert keys == sorted(keys)
  assert len(set(keys)) == len(keys)  # at most one attempt per cue per tick
  assert len(ground_truth_records(session)) == 12


def test_generate_one_tick_bound():
  session = generate(1, 1, default_process(), default_emission(), default_mapping(), seed=7)
  assert len(session.observations) <= 4


def test_generate_per_student_independent():
  table = default_mapping()
  small = generate(2, 10, default_process(), default_emission(), table, seed=3)
  large = generate(4, 10, default_process(), default_emission(), table, seed=3)
  for student in small.student_ids:
    assert small.ground_truth[student] == large.ground_truth[student]
    assert [o for o in small.observations if o.student_id == student] == [
      o for o in large.observations if o.student_id == student]


def test_generate_absorbing_chain():
  session = generate(3, 30, _absorbing(B), default_emission(), default_mapping(), seed=7)
  assert all(e == B for s in session.student_ids for e in session.ground_truth[s])


def test_evaluate_perfect_emission():
  table = default_mapping()
  session = generate(10, 50, default_process(), perfect_emission(), table, seed=7)
  report = evaluate(session, default_config(), table)
  assert report.accuracy("fused") == 1.
  assert report.accuracy("facial") == 1.
  assert report.accuracy("speech") == 1.
  assert report.no_evidence == {"facial": 0, "speech": 0, "eye": 0, "posture": 0, "fused": 0}
  # only bored: also eye and posture alone are unambiguous
  session = generate(3, 20, _absorbing(B), perfect_emission(), table, seed=7)
  report = evaluate(session, default_config(), table)
  assert all(m.trace == m.total == 60 for _, m in report.matrices())


def test_evaluate_report_shape():
  table = default_mapping()
  session = generate(5, 20, default_process(), default_emission(), table, seed=7)
  report = evaluate(session, default_config(), table)
  assert [name for name, _ in report.matrices()] == ["facial", "speech", "eye", "posture", "fused"]
  assert all(m.total == 100 for _, m in report.matrices())
  assert set(report.to_json_dict()) == {"facial", "speech", "eye", "posture", "fused"}
  with_majority = evaluate(session, default_config(), table, majority_baseline=True)
  assert [name for name, _ in with_majority.matrices()][-1] == "majority"
  assert "== fused" in report.render_text()


def test_facial_calibration():
  table = default_mapping()
  model = EmissionModel(
    accuracy=default_emission().accuracy,
    dropout={CueKind.FACIAL: 0., CueKind.SPEECH: 1., CueKind.EYE: 1., CueKind.POSTURE: 1.})
  session = generate(500, 200, default_process(), model, table, seed=2024)
  report = evaluate(session, default_config(), table)
  assert report.per_cue[CueKind.FACIAL].total == 100000
  assert report.no_evidence["facial"] == 0
  assert abs(report.accuracy("facial") - 0.6507) < 0.01


def test_fusion_beats_single_cues():
  table, config = default_mapping(), default_config()
  wins = 0
  for seed in range(7, 27):
    session = generate(50, 200, default_process(), default_emission(), table, seed=seed)
    report = evaluate(session, config, table)
    fused = report.accuracy("fused")
    if seed == 7:
      assert all(fused > report.accuracy(cue.value) for cue in Cues)
    wins += fused > report.accuracy("facial")
  assert wins >= 19


def test_session_records_round_trip():
  table = default_mapping()
  session = generate(4, 10, default_process(), default_emission(), table, seed=7)
  records = list(enumerate(ground_truth_records(session), 1))
  loaded = session_from_records(session.observations, records, step_ms=5000)
  assert dict(loaded.ground_truth) == dict(session.ground_truth)
  assert loaded.student_ids == session.student_ids
  assert loaded.ticks == 10
  assert evaluate(loaded, default_config(), table).fused == evaluate(session, default_config(), table).fused


def test_session_records_mismatched_student():
  session = generate(2, 3, default_process(), perfect_emission(), default_mapping(), seed=7)
  records = [(i, r) for i, r in enumerate(ground_truth_records(session), 1) if r["student"] != "s001"]
  with pytest.raises(ConfigError) as exc_info:
    session_from_records(session.observations, records, step_ms=5000)
  assert "s001" in str(exc_info.value)


def test_session_records_empty():
  with pytest.raises(ConfigError) as exc_info:
    session_from_records([], [], step_ms=5000)
  assert "no records" in str(exc_info.value)


def test_simulation_params_json():
  params = SimulationParams.from_json_dict({"students": 3, "ticks": 4, "seed": 9, "dropout": {"speech": 0.}})
  assert (params.students, params.ticks, params.seed) == (3, 4, 9)
  assert params.emission.dropout[CueKind.SPEECH] == 0.
  assert SimulationParams.from_json_dict(params.to_json_dict()) == params
  with pytest.raises(ConfigError):
    SimulationParams.from_json_dict({"classes": 3})
  with pytest.raises(ConfigError):
    SimulationParams.from_json_dict({"students": "many"})
  assert [f.where for f in validate_simulation_params(params.with_overrides(ticks=0))] == ["ticks"]


def test_shipped_simulation_params_are_default():
  d = read_json_file(os.path.join(_root_dir, "configs", "default_simulation.json"))
  assert SimulationParams.from_json_dict(d) == SimulationParams()
  assert d == SimulationParams().to_json_dict()


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
