
"""
Small, fully specified 64-bit random source, so that simulated sessions
are reproducible bit by bit, also from other languages.
See the README of this package for the exact recurrences.
All arithmetic is modulo 2**64.
"""

from __future__ import annotations
from typing import Sequence

Mask64 = (1 << 64) - 1
Golden64 = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
  """
  SplitMix64 output function (finalizer).
  """
  z &= Mask64
  z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & Mask64
  z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & Mask64
  return z ^ (z >> 31)


class SplitMix64:
  def __init__(self, seed: int):
    self.state = seed & Mask64

  def next_u64(self) -> int:
    self.state = (self.state + Golden64) & Mask64
    return mix64(self.state)


def derive_seed(seed: int, index: int) -> int:
  """
  Independent sub-seed, e.g. per student index.
  """
  return mix64(seed + (index + 1) * Golden64)


class XorShift64Star:
  """
  xorshift64* with shifts (12, 25, 27) and multiplier 0x2545F4914F6CDD1D.
  The state is initialized from the seed via one SplitMix64 step (never zero).
  """

  Multiplier = 0x2545F4914F6CDD1D

  def __init__(self, seed: int):
    state = SplitMix64(seed).next_u64()
    self.state = state or Golden64

  def next_u64(self) -> int:
    x = self.state
    x ^= x >> 12
    x ^= (x << 25) & Mask64
    x ^= x >> 27
    self.state = x
    return (x * self.Multiplier) & Mask64

  def uniform(self) -> float:
    """
    :return: float in [0, 1), the top 53 bits
    """
    return (self.next_u64() >> 11) * (1. / (1 << 53))

  def below(self, n: int) -> int:
    """
    :return: int in [0, n), as floor(u53 * n / 2**53) in exact integer arithmetic
    """
    assert n > 0
    return ((self.next_u64() >> 11) * n) >> 53

  def categorical(self, probs: Sequence[float]) -> int:
    """
    :param probs: non-negative, summing to 1
    :return: index i with probability probs[i]
    """
    u = self.uniform()
    acc = 0.
    last_positive = None
    for i, p in enumerate(probs):
      if p <= 0.:
        continue
      last_positive = i
      acc += p
      if u < acc:
        return i
    assert last_positive is not None, "no positive probability"
    return last_positive  # rounding, sum slightly below 1
