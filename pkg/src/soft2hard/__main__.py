"""Allow soft2hard to be run as: python -m soft2hard"""

from .main import main

if __name__ == "__main__":
    exit(main())
