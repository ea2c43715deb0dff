
"""
Command line entry point::

  python3 -m affect_fusion fuse observations.jsonl --out run1
  python3 -m affect_fusion simulate --seed 7 --students 50 --ticks 200 --out session1
  python3 -m affect_fusion evaluate session1 --out session1
  python3 -m affect_fusion validate-config --mapping configs/default_mapping.json
  python3 -m affect_fusion remap-fer7 fer_observations.jsonl --out run1

Exit codes: 0 success, 1 invalid configuration / validation findings / missing ground truth,
2 malformed or unsorted input (the message names the line).

Precedence of settings: flags > config files > built-in defaults.
Every run writes one ``manifest.json`` into ``--out``.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence
import argparse
import datetime
import os
import sys
from . import log
from .__setup__ import get_version_str
from .errors import AffectFusionError, ConfigError, Finding, MalformedInput, UnknownLabel, UnsortedInput
from .fusion import FusionConfig, MissingCuePolicy, check_fusion_config, default_config, validate_fusion_config
from .mapping import MappingTable, check_mapping, default_mapping, parse_fer7, remap_fer7, validate_mapping
from .serialization import (
  canonical_json_bytes, file_digest, iter_json_lines, observation_from_json_dict,
  observation_to_json_dict, read_json_file, read_jsonl, read_observations, sha256_bytes,
  write_json_atomic, write_jsonl_atomic, write_text_atomic)
from .sessions import (
  DefaultEngaged, DefaultWindowMs, WindowSpec, fuse_log, parse_engaged, render_rollups_text,
  render_timelines_text, rollup_timelines, rollup_to_json_dict, timelines_to_json_records)
from .simulator.evaluate import evaluate
from .simulator.session import (
  SimulationParams, generate_from_params, ground_truth_records, session_from_records, validate_simulation_params)
from .taxonomy import CueKind, Emotions, Observation, argmax_index, label_names

ObservationsFilename = "observations.jsonl"
GroundTruthFilename = "ground_truth.jsonl"
ManifestFilename = "manifest.json"


@dataclass
class RunManifest:
  """
  :param config_digests: sha256 of the config file bytes, or of the canonical JSON of the built-in default
  :param inputs: path -> sha256 of the file
  :param outputs: paths written by this run, in order
  """
  command: str
  tool_version: str
  config_digests: Dict[str, str] = field(default_factory=dict)
  inputs: Dict[str, str] = field(default_factory=dict)
  outputs: List[str] = field(default_factory=list)
  seed: Optional[int] = None
  parameters: Dict[str, Any] = field(default_factory=dict)
  exit_code: Optional[int] = None
  error: Optional[str] = None

  def to_json_dict(self) -> Dict[str, Any]:
    return {
      "command": self.command,
      "tool_version": self.tool_version,
      "config_digests": dict(sorted(self.config_digests.items())),
      "inputs": dict(sorted(self.inputs.items())),
      "outputs": list(self.outputs),
      "seed": self.seed,
      "parameters": self.parameters,
      "exit_code": self.exit_code,
      "error": self.error,
      "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }


class _Run:
  """
  State of one command invocation: resolved configs, the manifest, and the output dir.
  """

  def __init__(self, args: argparse.Namespace):
    self.args = args
    self.out_dir = args.out
    self.manifest = RunManifest(command=args.command, tool_version=get_version_str(fallback="1.0.0+unknown", long=True))

  def out_path(self, name: str) -> str:
    return os.path.join(self.out_dir, name)

  def write_text(self, name: str, text: str):
    path = self.out_path(name)
    write_text_atomic(path, text)
    self.manifest.outputs.append(path)

  def write_jsonl(self, name: str, records: Sequence[Any]):
    path = self.out_path(name)
    write_jsonl_atomic(path, records)
    self.manifest.outputs.append(path)

  def write_json(self, name: str, obj: Any):
    path = self.out_path(name)
    write_json_atomic(path, obj)
    self.manifest.outputs.append(path)

  def add_input(self, path: str):
    if os.path.isfile(path):
      self.manifest.inputs[path] = file_digest(path)

  def mapping(self) -> MappingTable:
    path = self.args.mapping
    if path is None:
      table = default_mapping()
      self.manifest.config_digests["mapping"] = sha256_bytes(canonical_json_bytes(table.to_json_dict()))
      return table
    table = MappingTable.from_json_dict(read_json_file(path, what="mapping"))
    self.manifest.config_digests["mapping"] = file_digest(path)
    return table

  def fusion_config(self) -> FusionConfig:
    path = self.args.fusion_config
    if path is None:
      config = default_config()
      self.manifest.config_digests["fusion"] = sha256_bytes(canonical_json_bytes(config.to_json_dict()))
    else:
      config = FusionConfig.from_json_dict(read_json_file(path, what="fusion config"))
      self.manifest.config_digests["fusion"] = file_digest(path)
    policy = getattr(self.args, "policy", None)
    if policy is not None:
      config = config.with_policy(MissingCuePolicy.parse(policy))
    return config

  def window_spec(self) -> WindowSpec:
    width = self.args.window_ms if self.args.window_ms is not None else DefaultWindowMs
    stride = self.args.stride_ms if self.args.stride_ms is not None else width
    return WindowSpec(width, stride)

  def finish(self, exit_code: int, error: Optional[str] = None):
    self.manifest.exit_code = exit_code
    self.manifest.error = error
    try:
      write_json_atomic(self.out_path(ManifestFilename), self.manifest.to_json_dict())
    except OSError as exc:
      print(f"error: cannot write manifest: {exc}", file=sys.stderr)


def _fuse_summary_text(timelines, reports) -> str:
  statuses = {"ok": 0, "no_evidence": 0, "insufficient_cues": 0}
  emotions = {e: 0 for e in Emotions}
  for timeline in timelines:
    for entry in timeline.entries:
      statuses[entry.status] += 1
      if entry.emotion is not None:
        emotions[entry.emotion] += 1
  with_evidence = [r for r in reports if r.students_with_evidence]
  lines = [
    f"students: {len(timelines)}",
    f"windows: {sum(statuses.values())} ({', '.join(f'{k} {v}' for k, v in statuses.items())})",
    "fused emotions: " + ", ".join(f"{e.value} {emotions[e]}" for e in Emotions),
  ]
  if with_evidence:
    mean = sum(r.engagement_fraction for r in with_evidence) / len(with_evidence)
    lines.append(f"mean engagement fraction: {mean:.4f} over {len(with_evidence)} classroom windows")
  else:
    lines.append("mean engagement fraction: n/a")
  return "\n".join(lines) + "\n"


def cmd_fuse(run: _Run) -> int:
  args = run.args
  table, config, spec = run.mapping(), run.fusion_config(), run.window_spec()
  check_mapping(table)
  check_fusion_config(config)
  try:
    engaged = parse_engaged(args.engaged) if args.engaged else DefaultEngaged
  except UnknownLabel as exc:
    raise ConfigError(f"--engaged: {exc}")
  run.manifest.parameters.update({
    "window_ms": spec.width_ms, "stride_ms": spec.stride_ms, "soft": args.soft,
    "policy": str(config.missing_cue_policy), "engaged": sorted(e.value for e in engaged)})
  run.add_input(args.input)
  observations = read_observations(args.input)
  timelines = fuse_log(observations, spec, config, table, soft=args.soft)
  reports = rollup_timelines(timelines, engaged=engaged)
  log.print_log(1, f"fuse: {len(observations)} observations, {len(timelines)} students, {len(reports)} windows")
  if args.format == "text":
    run.write_text("timeline.txt", render_timelines_text(timelines) if timelines else "")
    run.write_text("rollup.txt", render_rollups_text(reports) if reports else "")
  else:
    run.write_jsonl("timeline.jsonl", timelines_to_json_records(timelines))
    run.write_jsonl("rollup.jsonl", [rollup_to_json_dict(r) for r in reports])
  summary = _fuse_summary_text(timelines, reports)
  run.write_text("summary.txt", summary)
  print(summary, end="")
  return 0


def _simulation_params(run: _Run) -> SimulationParams:
  args = run.args
  params = SimulationParams()
  if args.params:
    params = SimulationParams.from_json_dict(read_json_file(args.params, what="simulation params"))
    run.manifest.config_digests["simulation"] = file_digest(args.params)
  if args.window_ms is not None:
    params = replace(params, process=replace(params.process, step_ms=args.window_ms))
  return params.with_overrides(
    students=getattr(args, "students", None), ticks=getattr(args, "ticks", None), seed=args.seed)


def cmd_simulate(run: _Run) -> int:
  table = run.mapping()
  check_mapping(table)
  params = _simulation_params(run)
  findings = validate_simulation_params(params)
  if findings:
    raise ConfigError(f"invalid simulation params, {len(findings)} finding(s):", findings)
  run.manifest.seed = params.seed
  run.manifest.parameters.update(params.to_json_dict())
  session = generate_from_params(params, table)
  run.write_jsonl(ObservationsFilename, [observation_to_json_dict(obs) for obs in session.observations])
  run.write_jsonl(GroundTruthFilename, ground_truth_records(session))
  print(
    f"simulated {session.students} students x {session.ticks} ticks, seed {params.seed}: "
    f"{len(session.observations)} observations")
  return 0


def _session_step_ms(run: _Run) -> int:
  """
  ``--window-ms`` if given, else the ``step_ms`` recorded in the session's manifest, else the default.
  """
  if run.args.window_ms is not None:
    step_ms = run.args.window_ms
  else:
    step_ms = DefaultWindowMs
    path = os.path.join(run.args.session_dir, ManifestFilename)
    if os.path.isfile(path):
      run.add_input(path)
      manifest = read_json_file(path, what="session manifest")
      parameters = manifest.get("parameters") if isinstance(manifest, dict) else None
      if isinstance(parameters, dict) and "step_ms" in parameters:
        step_ms = parameters["step_ms"]
        if isinstance(step_ms, bool) or not isinstance(step_ms, int):
          raise ConfigError(f"session manifest {path!r}: step_ms must be an integer, got {step_ms!r}")
  if step_ms <= 0:
    raise ConfigError(f"window must be a positive integer, got {step_ms}")
  return step_ms


def cmd_evaluate(run: _Run) -> int:
  args = run.args
  table, config = run.mapping(), run.fusion_config()
  check_mapping(table)
  check_fusion_config(config)
  obs_path = os.path.join(args.session_dir, ObservationsFilename)
  truth_path = os.path.join(args.session_dir, GroundTruthFilename)
  for path, what in ((truth_path, "ground truth"), (obs_path, "observations")):
    if not os.path.isfile(path):
      raise ConfigError(f"missing {what} file {path!r}")
    run.add_input(path)
  step_ms = _session_step_ms(run)
  run.manifest.parameters.update({
    "window_ms": step_ms, "step_ms": step_ms, "majority_baseline": args.majority_baseline})
  session = session_from_records(read_observations(obs_path), read_jsonl(truth_path), step_ms=step_ms)
  report = evaluate(session, config, table, majority_baseline=args.majority_baseline)
  text = report.render_text()
  run.write_json("report.json", report.to_json_dict())
  run.write_text("report.txt", text)
  print(text, end="")
  return 0


def cmd_validate_config(run: _Run) -> int:
  findings = []  # type: List[Finding]
  findings.extend(validate_mapping(run.mapping()))
  findings.extend(validate_fusion_config(run.fusion_config()))
  if run.args.params:
    findings.extend(validate_simulation_params(_simulation_params(run)))
  for f in findings:
    print(f)
  print(f"{len(findings)} finding(s)")
  run.manifest.parameters["findings"] = [str(f) for f in findings]
  return 1 if findings else 0


def _remap_fer7_record(line_no: int, d: Any, source: str) -> Observation:
  """
  Facial lines may carry a 7-class label and confidence. Everything else passes through as is.
  """
  if isinstance(d, dict) and d.get("cue") == CueKind.FACIAL.value and isinstance(d.get("label"), str):
    try:
      fer_label = parse_fer7(d["label"])
    except UnknownLabel:
      fer_label = None  # already in the five-emotion space
    if fer_label is not None:
      d = dict(d)
      d["label"] = remap_fer7(fer_label).value
      if isinstance(d.get("confidence"), dict):
        mass = {name: 0. for name in label_names(CueKind.FACIAL)}
        try:
          for key, p in d["confidence"].items():
            mass[remap_fer7(parse_fer7(key)).value] += p
        except (UnknownLabel, TypeError) as exc:
          raise MalformedInput(line_no, f"confidence: {exc}", source=source)
        d["confidence"] = mass
        # summed mass may move the argmax
        d["label"] = label_names(CueKind.FACIAL)[argmax_index(list(mass.values()))]
  try:
    return observation_from_json_dict(d)
  except (ValueError, TypeError, AffectFusionError) as exc:
    raise MalformedInput(line_no, str(exc), source=source)


def cmd_remap_fer7(run: _Run) -> int:
  path = run.args.input
  run.add_input(path)
  with open(path, "rb") as f:
    observations = [_remap_fer7_record(line_no, d, path) for line_no, d in iter_json_lines(f, source=path)]
  run.write_jsonl("remapped.jsonl", [observation_to_json_dict(obs) for obs in observations])
  print(f"remapped {len(observations)} observations")
  return 0


_Commands = {
  "fuse": cmd_fuse,
  "simulate": cmd_simulate,
  "evaluate": cmd_evaluate,
  "validate-config": cmd_validate_config,
  "remap-fer7": cmd_remap_fer7,
}


def make_arg_parser() -> argparse.ArgumentParser:
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument("--mapping", help="mapping table JSON (default: built-in)")
  common.add_argument("--fusion-config", help="fusion config JSON (default: built-in)")
  common.add_argument(
    "--window-ms", type=int,
    help=f"window width, and simulator tick (default {DefaultWindowMs}, evaluate: the session's recorded step_ms)")
  common.add_argument("--stride-ms", type=int, help="window stride (default: window width, i.e. tumbling)")
  common.add_argument("--seed", type=int)
  common.add_argument("--out", default=".", help="output directory (default: current dir)")
  common.add_argument("--format", choices=["jsonl", "text"], default="jsonl")
  common.add_argument("-v", "--verbose", action="count", default=0)

  parser = argparse.ArgumentParser(prog="affect_fusion", description="Decision-level multimodal affect fusion")
  sub = parser.add_subparsers(dest="command", required=True)

  p = sub.add_parser("fuse", parents=[common], help="fuse an observation log into timelines and rollups")
  p.add_argument("input", help="observation JSONL, sorted by ts")
  p.add_argument("--policy", help="missing-cue policy: skip, renormalize, require:K")
  p.add_argument("--soft", action="store_true", help="fuse averaged confidence distributions")
  p.add_argument("--engaged", help="comma separated engaged emotions (default: interested,neutral)")

  p = sub.add_parser("simulate", parents=[common], help="generate a synthetic session")
  p.add_argument("--params", help="simulation params JSON")
  p.add_argument("--students", type=int)
  p.add_argument("--ticks", type=int)

  p = sub.add_parser("evaluate", parents=[common], help="score a simulated session")
  p.add_argument("session_dir", help=f"dir with {ObservationsFilename} and {GroundTruthFilename}")
  p.add_argument("--policy", help="missing-cue policy: skip, renormalize, require:K")
  p.add_argument("--majority-baseline", action="store_true", help="also score unweighted majority voting")

  p = sub.add_parser("validate-config", parents=[common], help="validate mapping and fusion config")
  p.add_argument("--params", help="also validate simulation params JSON")

  p = sub.add_parser("remap-fer7", parents=[common], help="map 7-class facial labels to the five emotions")
  p.add_argument("input", help="observation JSONL")
  return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
  """
  :return: exit code
  """
  import better_exchook
  better_exchook.install()
  args = make_arg_parser().parse_args(argv)
  log.Verbosity = max(log.Verbosity, args.verbose)
  run = _Run(args)
  try:
    exit_code = _Commands[args.command](run)
  except ConfigError as exc:
    print(f"error: {exc}", file=sys.stderr)
    run.finish(1, str(exc))
    return 1
  except (MalformedInput, UnsortedInput) as exc:
    print(f"error: {exc}", file=sys.stderr)
    run.finish(2, str(exc))
    return 2
  except OSError as exc:
    print(f"error: {exc}", file=sys.stderr)
    run.finish(2, str(exc))
    return 2
  run.finish(exit_code)
  return exit_code


if __name__ == "__main__":
  sys.exit(main())
