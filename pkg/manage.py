#!/usr/bin/env python
"""Command-line utility: synth, train, predict, ensemble, evaluate."""

import sys

from msnet.cli.router import main

if __name__ == "__main__":
    sys.exit(main())
