import sys

from cli import main as cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
