"""Allow ``python -m path_projection``."""

import sys

from .cli import main

sys.exit(main())
