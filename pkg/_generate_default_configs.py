#!/usr/bin/env python3

"""
Writes the built-in defaults to configs/, so that the shipped files always reflect the code.
"""

import os
from affect_fusion.fusion import default_config
from affect_fusion.mapping import default_mapping
from affect_fusion.serialization import write_json_atomic
from affect_fusion.simulator.session import SimulationParams

_my_dir = os.path.dirname(os.path.abspath(__file__))
ConfigDir = os.path.join(_my_dir, "configs")


def default_config_files():
  """
  :return: filename -> JSON object
  :rtype: dict[str,dict]
  """
  return {
    "default_mapping.json": default_mapping().to_json_dict(),
    "default_fusion.json": default_config().to_json_dict(),
    "default_simulation.json": SimulationParams().to_json_dict(),
  }


def main():
  for name, obj in default_config_files().items():
    path = os.path.join(ConfigDir, name)
    write_json_atomic(path, obj)
    print("Wrote", path)


if __name__ == '__main__':
  main()
