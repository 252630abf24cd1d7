"""Main entry point for soft2hard."""

import logging
import sys
from typing import Optional, Sequence

from .cli import parse_args, print_error, run_command
from .exceptions import ConfigError, NumericalError, OverlapError


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for soft2hard CLI.

    Returns:
        Exit code (0=success, 1=numerical/runtime failure, 2=invalid config or hypotheses)
    """
    try:
        command, config = parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if config.verbose else logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        summary = run_command(command, config)
        return summary.exit_code

    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 2

    except (ConfigError, OverlapError) as e:
        print_error(str(e))
        return 2

    except NumericalError as e:
        print_error(f"{type(e).__name__}: {e}")
        return 1

    except Exception as e:
        print_error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
