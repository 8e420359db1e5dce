import sys

from clustseg.main import main

sys.exit(main())
