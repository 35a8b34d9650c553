"""Worker-count policy shared by the refit and sweep drivers."""
import os
from typing import Optional

ENV_VAR = "GAMP_GAP_THREADS"


def max_workers(requested: Optional[int] = None) -> int:
    """Number of worker threads, capped by $GAMP_GAP_THREADS when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_VAR)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {cap!r}") from None
    return max(1, int(n))
