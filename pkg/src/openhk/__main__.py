import sys

from openhk.cli import main

sys.exit(main())
