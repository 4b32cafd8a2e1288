import sys

from hopfsol.cli import main

sys.exit(main())
