import sys

from energyvol.cli import main

sys.exit(main())
