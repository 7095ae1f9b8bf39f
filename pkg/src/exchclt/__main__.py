import sys

from exchclt.cli import main

sys.exit(main())
