"""Entry point for running the simulator as a module."""

from .main import main

if __name__ == "__main__":
    raise SystemExit(main())
