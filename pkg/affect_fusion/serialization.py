
"""
File formats: observation JSONL, generic JSONL / JSON, atomic writes and config digests.

Observation line::

  {"ts": 1000, "student": "s01", "cue": "eye", "label": "looking_away",
   "confidence": {"looking_away": 0.8, "looking_at_screen": 0.2}}

``confidence`` is optional. Any malformed line aborts reading with :class:`MalformedInput`
naming the 1-based line number.
"""

from __future__ import annotations
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union
import hashlib
import json
import os
import tempfile
from .errors import AffectFusionError, ConfigError, MalformedInput
from .taxonomy import Observation, label_names

ObservationKeys = ("ts", "student", "cue", "label", "confidence")


def dumps_line(obj: Any) -> str:
  """
  Deterministic single-line JSON (key order as given).
  """
  return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "), allow_nan=False)


def canonical_json_bytes(obj: Any) -> bytes:
  return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf8")


def sha256_bytes(data: bytes) -> str:
  return hashlib.sha256(data).hexdigest()


def file_digest(path: str) -> str:
  with open(path, "rb") as f:
    return sha256_bytes(f.read())


def observation_to_json_dict(obs: Observation) -> Dict[str, Any]:
  d = {"ts": obs.timestamp, "student": obs.student_id, "cue": obs.cue.value, "label": obs.label.label}
  if obs.confidence is not None:
    d["confidence"] = dict(zip(label_names(obs.cue), obs.confidence))
  return d


def observation_from_json_dict(d: Any) -> Observation:
  """
  :raises ValueError: (or subclasses, e.g. UnknownLabel, BadDistribution) on any violation
  """
  if not isinstance(d, dict):
    raise ValueError(f"expected a JSON object, got {type(d).__name__}")
  unknown = set(d.keys()) - set(ObservationKeys)
  if unknown:
    raise ValueError(f"unknown keys {sorted(unknown)}")
  for key in ("ts", "student", "cue", "label"):
    if key not in d:
      raise ValueError(f"missing key {key!r}")
  ts = d["ts"]
  if isinstance(ts, bool) or not isinstance(ts, int):
    raise ValueError(f"ts must be an integer (milliseconds), got {ts!r}")
  if not isinstance(d["student"], str):
    raise ValueError(f"student must be a string, got {d['student']!r}")
  confidence = d.get("confidence")
  if confidence is not None:
    if not isinstance(confidence, dict):
      raise ValueError("confidence must be an object label -> number")
    for key, value in confidence.items():
      if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"confidence[{key!r}] must be a number, got {value!r}")
  return Observation.make(ts, d["student"], d["cue"], d["label"], confidence=confidence)


def iter_json_lines(lines: Iterable[Union[bytes, str]], *, source: Optional[str] = None) -> Iterator[Tuple[int, Any]]:
  """
  :param lines: text lines, or raw lines (e.g. a file opened in binary mode), which must be UTF-8
  :return: yields (1-based line number, parsed object). Blank lines are skipped.
  """
  for line_no, line in enumerate(lines, 1):
    if isinstance(line, bytes):
      try:
        line = line.decode("utf8")
      except UnicodeDecodeError as exc:
        raise MalformedInput(line_no, f"invalid UTF-8 at byte {exc.start}", source=source)
    if not line.strip():
      continue
    try:
      obj = json.loads(line)
    except json.JSONDecodeError as exc:
      raise MalformedInput(line_no, f"invalid JSON: {exc.msg}", source=source)
    except RecursionError:
      raise MalformedInput(line_no, "JSON nested too deeply", source=source)
    yield line_no, obj


def parse_observations(lines: Iterable[Union[bytes, str]], *, source: Optional[str] = None) -> List[Observation]:
  res = []
  for line_no, d in iter_json_lines(lines, source=source):
    try:
      res.append(observation_from_json_dict(d))
    except (ValueError, TypeError, AffectFusionError) as exc:
      raise MalformedInput(line_no, str(exc), source=source)
  return res


def read_observations(path: str) -> List[Observation]:
  with open(path, "rb") as f:
    return parse_observations(f, source=path)


def read_jsonl(path: str) -> List[Tuple[int, Any]]:
  with open(path, "rb") as f:
    return list(iter_json_lines(f, source=path))


def read_json_file(path: str, *, what: str = "config") -> Any:
  """
  :raises ConfigError: if unreadable or not valid JSON
  """
  try:
    with open(path, "r", encoding="utf8") as f:
      return json.load(f)
  except OSError as exc:
    raise ConfigError(f"cannot read {what} file {path!r}: {exc}")
  except json.JSONDecodeError as exc:
    raise ConfigError(f"{what} file {path!r} is not valid JSON: {exc}")
  except UnicodeDecodeError as exc:
    raise ConfigError(f"{what} file {path!r} is not valid UTF-8: {exc.reason} at byte {exc.start}")
  except RecursionError:
    raise ConfigError(f"{what} file {path!r}: JSON nested too deeply")


def write_text_atomic(path: str, text: str):
  """
  Writes to a temp file in the same directory, then renames.
  A partially written file never appears under the final name.
  """
  dir_name = os.path.dirname(os.path.abspath(path))
  os.makedirs(dir_name, exist_ok=True)
  fd, tmp_path = tempfile.mkstemp(prefix=f".{os.path.basename(path)}.", suffix=".tmp", dir=dir_name)
  try:
    with os.fdopen(fd, "w", encoding="utf8", newline="\n") as f:
      f.write(text)
      f.flush()
      os.fsync(f.fileno())
    # mkstemp creates 0600, give the file the mode a plain open() would.
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp_path, 0o666 & ~umask)
    os.replace(tmp_path, path)
  except BaseException:
    if os.path.exists(tmp_path):
      os.remove(tmp_path)
    raise


def write_jsonl_atomic(path: str, records: Iterable[Any]):
  write_text_atomic(path, "".join(dumps_line(r) + "\n" for r in records))


def write_json_atomic(path: str, obj: Any):
  write_text_atomic(path, json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n")
