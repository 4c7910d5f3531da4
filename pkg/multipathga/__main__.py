import  sys

from    multipathga.harness_cli import main

sys.exit(main())
