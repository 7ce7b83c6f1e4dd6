import sys

from defectmine.cli import main

sys.exit(main())
