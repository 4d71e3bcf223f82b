"""WCET estimation and timing debugging for a deterministic virtual processor.

Pipeline: MiniC frontend -> virtual-processor compiler and timed CFG ->
source-level timing instrumentation (back-mapping) -> timing-preserving
transforms (slicing, loop acceleration, loop abstraction) -> assertion
checking -> bisection search for WCET/BCET -> counterexample replay,
profiling and trace export.
"""

__version__ = "0.1.0"
