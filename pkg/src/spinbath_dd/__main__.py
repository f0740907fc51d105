import sys

from .cli_experiments.cli import main

sys.exit(main())
