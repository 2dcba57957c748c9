"""
Utility Functions for ratio-allocator
=====================================

Modules
-------
- io: JSON/CSV writers and output skipping
- seeding: seeded Philox streams and seed derivation
- export: report tables and figures (import directly; it depends on core)
"""

from .io import (
    read_json,
    safe_name,
    should_process_output,
    write_json,
    write_rows_csv,
)
from .seeding import (
    derive_run_seed,
    derive_window_seed,
    make_rng,
)

__all__ = [
    # Files
    "read_json",
    "safe_name",
    "should_process_output",
    "write_json",
    "write_rows_csv",

    # Randomness
    "derive_run_seed",
    "derive_window_seed",
    "make_rng",
]
