"""Random diagonal-phase states: sampling, exact moment checks, trace estimation, and circuit/analog compilation."""

__version__ = "0.1.0"
