
"""
Version discovery. Used by setup.py, and for the tool version in run manifests.
"""

from __future__ import annotations
from typing import Optional
import os
import subprocess
import sys
from subprocess import PIPE, CalledProcessError, Popen

_my_dir = os.path.dirname(os.path.abspath(__file__))
# Use realpath to resolve any symlinks. We want the real root-dir, to be able to check the Git revision.
_root_dir = os.path.dirname(os.path.realpath(_my_dir))


def sys_exec_out(*args, **kwargs) -> str:
  """
  :param args: for subprocess.Popen
  :param kwargs: for subprocess.Popen
  :return: stdout (assumes utf8)
  """
  kwargs.setdefault("shell", False)
  p = Popen(args, stdin=PIPE, stdout=PIPE, stderr=PIPE, **kwargs)
  out, _ = p.communicate()
  if p.returncode != 0:
    raise CalledProcessError(p.returncode, args)
  return out.decode("utf8")


def git_is_dirty(git_dir: str = ".") -> bool:
  r = subprocess.call(
    ["git", "diff", "--no-ext-diff", "--quiet", "--exit-code"], cwd=git_dir, stdout=PIPE, stderr=PIPE)
  if r not in (0, 1):
    raise CalledProcessError(r, "git diff")
  return r == 1


def git_head_version(git_dir: str = _root_dir, long: bool = False) -> str:
  """
  :param git_dir:
  :param long: see :func:`get_version_str`
  """
  commit_date = (
    sys_exec_out("git", "show", "-s", "--format=%ci", "HEAD", cwd=git_dir)
    .strip()[:-6].replace(":", "").replace("-", "").replace(" ", "."))  # like "20260202.154527"
  version = "1.%s" % commit_date
  if long:
    version += "+git.%s" % sys_exec_out("git", "rev-parse", "--short", "HEAD", cwd=git_dir).strip()
    if git_is_dirty(git_dir=git_dir):
      version += ".dirty"
  return version


def get_version_str(verbose: bool = False, fallback: Optional[str] = None, long: bool = False) -> str:
  """
  :param verbose:
  :param fallback: used if neither the generated info file nor Git gives a version
  :param long:
    False: like "1.20260202.154527".
    True: also with the revision, like "1.20260202.154527+git.7865d01". Always contains a "+".
  """
  # Installed package: setup.py wrote _setup_info_generated.py next to us.
  for info_fn in ("%s/_setup_info_generated.py" % _my_dir, "%s/_setup_info_generated.py" % _root_dir):
    if os.path.exists(info_fn):
      info = {}
      with open(info_fn) as f:
        exec(compile(f.read(), info_fn, "exec"), info)
      if verbose:
        print("Found %r, long version %r, version %r." % (info_fn, info["long_version"], info["version"]))
      return info["long_version"] if long else info["version"]

  if os.path.exists("%s/.git" % _root_dir):
    try:
      version = git_head_version(git_dir=_root_dir, long=long)
      if verbose:
        print("Version via Git:", version)
      return version
    except Exception as exc:
      if verbose:
        print("Exception while getting Git version:", exc)
        sys.excepthook(*sys.exc_info())
      if not fallback:
        raise

  if fallback:
    if verbose:
      print("Version via fallback:", fallback)
    if long:
      assert "+" in fallback
    return fallback
  raise Exception("Cannot get affect_fusion version.")
