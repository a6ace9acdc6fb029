import sys

from graphqeq.cli import main

sys.exit(main())
