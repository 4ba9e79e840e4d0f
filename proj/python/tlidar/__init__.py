"""Temporal LiDAR aggregation, image-feature fusion and static-moving augmentation.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it and adds a couple of conveniences.
"""

from ._core import *  # noqa: F401,F403
from ._core import Error, cli, division_preset, generate_synthetic

__all__ = [name for name in dir() if not name.startswith("_")]


def run_cli(*args):
    """Run the command-line tool in-process and raise on a nonzero exit code."""
    code, out, err = cli([str(a) for a in args])
    if code != 0:
        raise Error(f"tlidar {' '.join(map(str, args))} exited {code}: {err.strip()}")
    return out
