"""NLWitness entry point. Same as `python -m nlwitness`."""
import os
import sys


def main():
    root = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, root)

    from nlwitness.cli import main as cli_main

    return cli_main()


if __name__ == "__main__":
    sys.exit(main())
