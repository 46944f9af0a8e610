import sys

from ldpfreq.cli import main

sys.exit(main())
