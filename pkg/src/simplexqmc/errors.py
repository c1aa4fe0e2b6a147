class PreconditionError(ValueError):
    """Smoothness ``r`` is too small for the kernel series to converge (``r <= d + 1``)."""


def require_smoothness(d: int, r: float) -> None:
    if not r > d + 1:
        raise PreconditionError(f"smoothness r={r} must exceed d+1={d + 1}")
