"""
OUFreq Main Entry Point

Command-line entry point for the OUFreq toolkit: simulation, filtering and
frequency estimation for OU-modulated periodic signals observed in small noise.
"""

import os
import sys

from dotenv import load_dotenv

# Add the project root to the Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from oufreq_app.src.ui.cli import run  # noqa: E402

# Load OUFREQ_LOG_LEVEL / OUFREQ_WORKERS from a .env file if present
load_dotenv()


def main() -> int:
    """Main entry point; logging is configured by the CLI once --out is known."""
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
