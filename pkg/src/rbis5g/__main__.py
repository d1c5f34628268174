import sys

from rbis5g.cli import main

sys.exit(main())
