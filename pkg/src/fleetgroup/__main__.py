import sys

from fleetgroup.cli import main

sys.exit(main())
