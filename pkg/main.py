"""
ergodic-lab - Entry Point
Thin bootstrap that hands the command line to cli.commands.
"""

import sys

from cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
