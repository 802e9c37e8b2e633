"""
Cyclic-pattern network toolkit - Main Entry Point
"""

import signal
import sys

import cli


def signal_handler(sig, frame):
    """Handle interrupts during long sweeps"""
    print("\nInterrupted.")
    sys.exit(130)


def main():
    signal.signal(signal.SIGINT, signal_handler)
    sys.exit(cli.main())


if __name__ == "__main__":
    main()
