"""
``python3 -m affect_fusion ...``, see :mod:`affect_fusion.cli`.
"""

import sys
from .cli import main

sys.exit(main())
