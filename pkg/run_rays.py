#!/usr/bin/env python3

import os
import sys

# Make the rays package importable from a checkout
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rays.main import main

if __name__ == "__main__":
    sys.exit(main())
