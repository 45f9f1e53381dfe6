import sys

from cxflow.cli.main import main

sys.exit(main())
