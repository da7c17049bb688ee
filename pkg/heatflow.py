#!/usr/bin/env python3
"""Entry point: python heatflow.py <subcommand> [options]."""

from src.cli import main

if __name__ == "__main__":
    main()
