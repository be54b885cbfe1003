"""
Thin launcher for development runs. Delegates to installed entry point logic.
"""

import sys

from src.__main__ import main


if __name__ == '__main__':
    sys.exit(main())
