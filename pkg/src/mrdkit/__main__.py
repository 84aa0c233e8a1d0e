import sys

from mrdkit.cli import main

sys.exit(main())
