import sys

from curveq.cli import main

sys.exit(main())
