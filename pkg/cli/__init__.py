"""
Command-line harness: run, compare, tune, verify and cache subcommands
"""

from .commands import EXIT_DIVERGED, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED, main

__all__ = ['EXIT_DIVERGED', 'EXIT_OK', 'EXIT_USAGE', 'EXIT_VERIFY_FAILED', 'main']
