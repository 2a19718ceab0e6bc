import sys

from dynmix.main import main

sys.exit(main())
