"""Waypoint tracking, the closed-loop harness, and benchmark evaluation.

Kept import-light: pull classes from the submodules directly, e.g.
``from drivescope.control.loop import run_closed_loop``.
"""

from .command import ControlCommand

__all__ = ["ControlCommand"]
