#!/usr/bin/env python3
"""
Launcher for the lab workflows.

Usage:
    python scripts/run_lab.py steady --config run.cfg [--out-dir out]

Environment variables (optional):
    - CHEMOLAB_LOG_LEVEL (default INFO)
    - CHEMOLAB_OUT_DIR (default ./out)
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
