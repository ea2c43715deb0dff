"""
Usage:

    pip3 install .

New release:

    python3 setup.py sdist
    twine upload dist/*.tar.gz

For debugging this script:

    python3 setup.py sdist
    pip3 install --user dist/*.tar.gz -v

"""

import os
from affect_fusion.__setup__ import get_version_str


def main():
  """
  Setup main entry
  """
  # No current time as fallback version,
  # it could be bigger than any version we actually have.
  long_version = get_version_str(verbose=True, fallback="1.0.0+setup-fallback-version", long=True)
  version = long_version[:long_version.index("+")]

  if not os.path.exists("PKG-INFO"):
    # sdist: freeze the version, the package will not have the Git history.
    with open("_setup_info_generated.py", "w") as f:
      f.write("version = %r\n" % version)
      f.write("long_version = %r\n" % long_version)

  from setuptools import setup
  setup(
    name='affect_fusion',
    version=version,
    packages=['affect_fusion', 'affect_fusion.simulator'],
    package_data={'affect_fusion': ['README.md', 'simulator/README.md']},
    data_files=[('configs', [
      'configs/default_mapping.json', 'configs/default_fusion.json', 'configs/default_simulation.json'])],
    description='Decision-level multimodal affect fusion for online classes, with a classroom simulator',
    long_description=open('README.rst').read(),
    python_requires='>=3.7',
    install_requires=[
      # Note: This is kept minimal.
      "numpy",
      "better_exchook",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["affect-fusion = affect_fusion.cli:main"]},
    # https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
      'Development Status :: 4 - Beta',
      'Environment :: Console',
      'Intended Audience :: Education',
      'Intended Audience :: Science/Research',
      'Operating System :: OS Independent',
      'Programming Language :: Python',
      'Programming Language :: Python :: 3',
      'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ]
  )


if __name__ == "__main__":
  main()
