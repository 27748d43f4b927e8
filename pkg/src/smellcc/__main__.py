import sys

from smellcc.cli import main

sys.exit(main())
