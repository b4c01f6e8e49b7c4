import sys

from nonloc.main import main

sys.exit(main())
