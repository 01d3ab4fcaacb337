import sys

from nlwitness.cli import main

sys.exit(main())
