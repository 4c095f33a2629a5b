from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class SolveReport:
    """Diagnostics collected by the solvers.

    ``wall_time_ms`` is informational and is left out of :meth:`to_dict`
    unless asked for, so that emitted reports stay byte-stable.
    """

    iterations: int = 0
    final_residual: float = 0.0
    K_estimate: float | None = None
    L_estimate: float | None = None
    cutoff_radius: float | None = None
    wall_time_ms: float = 0.0
    residuals: list[float] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        d = asdict(self)
        if not include_timing:
            d.pop("wall_time_ms")
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
