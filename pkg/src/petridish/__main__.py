"""Allow ``python -m petridish`` as an alias for the ``petridish`` command."""

import sys

from .cli import main

sys.exit(main())
