"""Program transformations that shrink checker work while tracking `_time`.

Three stages, applied in order after instrumentation, each taking and
returning a whole program:

  * slicing   - drops statements that cannot influence the final `_time`
                (exact);
  * acceleration - replaces counter loops with straight-line bodies by
                closed-form updates (exact);
  * abstraction - replaces remaining constant-bound counter loops by
                worst-branch charges and havocked state (`_time` is
                over-approximated, never under).
"""
from .abstract import abstract_loops
from .accel import LoopSummary, accelerate
from .pdg import CRIT, Pdg, PdgNode, build_pdg
from .slicing import slice_time

__all__ = [
    "CRIT",
    "LoopSummary",
    "Pdg",
    "PdgNode",
    "abstract_loops",
    "accelerate",
    "build_pdg",
    "slice_time",
]
