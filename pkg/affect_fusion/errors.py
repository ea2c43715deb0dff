
"""
Exceptions, and the :class:`Finding` record used by all config validators.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Sequence


class AffectFusionError(Exception):
  """
  Base class of all errors raised by this package.
  """


class UnknownLabel(AffectFusionError, ValueError):
  """
  A string which is not in the expected label vocabulary.
  """


class InsufficientCues(AffectFusionError):
  """
  Missing-cue policy ``require(k)`` with fewer than k cues present.
  """
  def __init__(self, present: int, required: int):
    super(InsufficientCues, self).__init__(f"{present} cue(s) present, policy requires {required}")
    self.present = present
    self.required = required


class NoEvidence(AffectFusionError):
  """
  :func:`affect_fusion.fusion.decide` on scores without any contributing cue.
  """


class BadDistribution(AffectFusionError, ValueError):
  """
  Confidence distribution with negative mass, wrong length, or sum outside the tolerance.
  """


class UnsortedInput(AffectFusionError, ValueError):
  def __init__(self, index: int, timestamp: int, previous: int):
    super(UnsortedInput, self).__init__(
      f"observation {index} has timestamp {timestamp} < previous timestamp {previous}")
    self.index = index


class EmptyMatrix(AffectFusionError):
  pass


class SpaceMismatch(AffectFusionError):
  pass


class MalformedInput(AffectFusionError, ValueError):
  def __init__(self, line_no: int, msg: str, *, source: Optional[str] = None):
    where = f"{source}, line {line_no}" if source else f"line {line_no}"
    super(MalformedInput, self).__init__(f"{where}: {msg}")
    self.line_no = line_no
    self.source = source


@dataclass(frozen=True)
class Finding:
  """
  One validation finding.

  :param kind: e.g. "missing entry", "empty set", "unreachable emotion", "negative weight"
  :param where: e.g. "posture/writing"
  """
  kind: str
  where: str
  message: str

  def __str__(self):
    return f"{self.kind}: {self.where}: {self.message}"


class ConfigError(AffectFusionError):
  """
  Invalid configuration: either a parse error, or a non-empty list of validation findings.
  """
  def __init__(self, msg: str, findings: Sequence[Finding] = ()):
    if findings:
      msg = msg + "\n" + "\n".join(f"  {f}" for f in findings)
    super(ConfigError, self).__init__(msg)
    self.findings = list(findings)


def raise_on_findings(what: str, findings: Sequence[Finding]):
  if findings:
    raise ConfigError(f"invalid {what}, {len(findings)} finding(s):", findings)
