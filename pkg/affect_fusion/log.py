
"""
Verbosity-gated printing.

The CLI sets :data:`Verbosity` from the ``-v`` count, tests set it to 3.
Everything goes to stderr, so stdout stays free for reports.
"""

import sys


Verbosity = 0


_unique_prints = set()


def print_log(level: int, *args):
  """
  :param level: printed only if ``Verbosity >= level``
  """
  if Verbosity < level:
    return
  print(*args, file=sys.stderr)


def unique_print(txt: str):
  """
  Prints each distinct message only once per process,
  e.g. for fallbacks which would otherwise repeat for every simulated window.
  """
  if Verbosity >= 100:  # always print, ignore unique
    print(txt, file=sys.stderr)
    return
  if txt in _unique_prints:
    return
  _unique_prints.add(txt)
  print(txt, file=sys.stderr)
