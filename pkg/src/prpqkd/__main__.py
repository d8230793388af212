import sys

from prpqkd.cli import main

sys.exit(main())
