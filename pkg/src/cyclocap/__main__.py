import sys

from cyclocap.cli.main import main

sys.exit(main())
