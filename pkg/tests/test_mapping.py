
import _setup_test_env  # noqa
import os
import sys
import unittest
import pytest
from affect_fusion.errors import ConfigError, UnknownLabel
from affect_fusion.mapping import (
  Fer7Label, MappingTable, candidate_labels, check_mapping, default_mapping, map_cue_output,
  parse_fer7, remap_fer7, remap_fer7_text, validate_mapping)
from affect_fusion.serialization import read_json_file
from affect_fusion.taxonomy import CueKind, CueLabel, Cues, EmotionLabel, Emotions

_root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

B, C, F, I, N = (
  EmotionLabel.BORED, EmotionLabel.CONFUSED, EmotionLabel.FRUSTRATED, EmotionLabel.INTERESTED, EmotionLabel.NEUTRAL)


def test_default_mapping_entries():
  table = default_mapping()
  assert map_cue_output(CueKind.EYE, "looking_at_screen", table) == {C, F, I}
  assert map_cue_output(CueKind.EYE, "looking_away", table) == {B}
  assert map_cue_output(CueKind.POSTURE, "slouching", table) == {B, F}
  assert map_cue_output(CueKind.POSTURE, "upright", table) == {N, I}
  assert map_cue_output(CueKind.POSTURE, "writing", table) == {I}
  for cue in (CueKind.FACIAL, CueKind.SPEECH):
    for e in Emotions:
      assert map_cue_output(cue, e.value, table) == {e}


def test_default_mapping_valid():
  assert validate_mapping(default_mapping()) == []
  check_mapping(default_mapping())


def test_map_cue_output_unknown_label():
  with pytest.raises(UnknownLabel):
    map_cue_output(CueKind.EYE, "blinking", default_mapping())


def test_membership_matrix():
  m = default_mapping().membership(CueKind.POSTURE)
  assert m.shape == (3, 5)
  assert m[0].tolist() == [1., 0., 1., 0., 0.]  # slouching
  assert m[1].tolist() == [0., 0., 0., 1., 1.]  # upright
  assert not m.flags.writeable


def test_validate_mapping_findings():
  entries = dict(default_mapping().entries)
  del entries[(CueKind.POSTURE, "writing")]
  entries[(CueKind.EYE, "looking_away")] = set()
  findings = validate_mapping(MappingTable(entries))
  kinds = sorted((f.kind, f.where) for f in findings)
  assert ("missing entry", "posture/writing") in kinds
  assert ("empty set", "eye/looking_away") in kinds
  # bored is still reachable via facial, speech and slouching
  assert all(f.kind != "unreachable emotion" for f in findings)
  with pytest.raises(ConfigError) as exc_info:
    check_mapping(MappingTable(entries))
  assert len(exc_info.value.findings) == 2


def test_validate_mapping_unreachable_emotion():
  entries = {
    key: emotions - {N} for key, emotions in default_mapping().entries.items()}
  findings = validate_mapping(MappingTable(entries))
  assert ("unreachable emotion", "neutral") in [(f.kind, f.where) for f in findings]


def test_mapping_json_round_trip():
  table = default_mapping()
  assert MappingTable.from_json_dict(table.to_json_dict()) == table


def test_mapping_from_json_errors():
  with pytest.raises(ConfigError):
    MappingTable.from_json_dict({"gaze": {}})
  with pytest.raises(ConfigError):
    MappingTable.from_json_dict({"eye": {"blinking": ["bored"]}})
  with pytest.raises(ConfigError):
    MappingTable.from_json_dict({"eye": {"looking_away": ["sleepy"]}})
  with pytest.raises(ConfigError):
    MappingTable.from_json_dict([])
  # incomplete is fine when parsing
  partial = MappingTable.from_json_dict({"eye": {"looking_away": ["bored"]}})
  assert validate_mapping(partial)


def test_shipped_mapping_is_default():
  d = read_json_file(os.path.join(_root_dir, "configs", "default_mapping.json"))
  assert MappingTable.from_json_dict(d) == default_mapping()
  assert d == default_mapping().to_json_dict()


def test_candidate_labels():
  table = default_mapping()
  assert candidate_labels(CueKind.EYE, I, table) == (CueLabel(CueKind.EYE, "looking_at_screen"),)
  assert candidate_labels(CueKind.EYE, B, table) == (CueLabel(CueKind.EYE, "looking_away"),)
  assert candidate_labels(CueKind.POSTURE, I, table) == (
    CueLabel(CueKind.POSTURE, "upright"), CueLabel(CueKind.POSTURE, "writing"))
  assert candidate_labels(CueKind.POSTURE, C, table) == ()
  assert candidate_labels(CueKind.FACIAL, F, table) == (CueLabel(CueKind.FACIAL, "frustrated"),)


def test_remap_fer7_all():
  expected = {
    Fer7Label.HAPPY: I,
    Fer7Label.SURPRISE: I,
    Fer7Label.SAD: B,
    Fer7Label.ANGRY: F,
    Fer7Label.DISGUST: F,
    Fer7Label.AFRAID: C,
    Fer7Label.NEUTRAL: N,
  }
  assert set(expected) == set(Fer7Label)
  for label, e in expected.items():
    assert remap_fer7(label) == e


def test_remap_fer7_text_spellings():
  assert remap_fer7_text("Happy") == I
  assert remap_fer7_text("surprised") == I
  assert remap_fer7_text("fear") == C
  assert remap_fer7_text("disgusted") == F
  assert parse_fer7("afraid") == Fer7Label.AFRAID
  with pytest.raises(UnknownLabel):
    remap_fer7_text("bored")


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
