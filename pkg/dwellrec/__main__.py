"""Entry point for ``python -m dwellrec``."""

from dwellrec.cli import main

if __name__ == "__main__":
    main()
