import sys

from backupsched.cli import main

sys.exit(main())
