"""Source instrumentation: timing increments, hardening, drivers."""
from .backmap import BackMap, MapEntry, instrument, verify_coverage
from .driver import build_driver, harden_persistent_state

__all__ = [
    "BackMap", "MapEntry", "instrument", "verify_coverage",
    "build_driver", "harden_persistent_state",
]
