import os

import mpmath

PRECISION_ENV_VAR = 'PYCPC_PRECISION'
DEFAULT_PRECISION = 256
MIN_PRECISION = 64


def default_precision() -> int:
    """Return the working precision in bits, honouring the PYCPC_PRECISION environment variable."""
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None or not raw.strip():
        return DEFAULT_PRECISION
    try:
        bits = int(raw)
    except ValueError as e:
        raise ValueError(f"{PRECISION_ENV_VAR} must be an integer number of bits, got '{raw}'") from e
    if bits < MIN_PRECISION:
        raise ValueError(f'{PRECISION_ENV_VAR} must be at least {MIN_PRECISION} bits, got {bits}')
    return bits


def resolve_precision(prec: int | None) -> int:
    """Return `prec` if given, else the default precision."""
    if prec is None:
        return default_precision()
    if prec < MIN_PRECISION:
        raise ValueError(f'precision must be at least {MIN_PRECISION} bits, got {prec}')
    return prec


def is_power_of_two(k: int) -> bool:
    return k > 0 and k & (k - 1) == 0


def relative_gap(a: mpmath.mpf | mpmath.mpc, b: mpmath.mpf | mpmath.mpc) -> mpmath.mpf:
    """Return |a - b| / max(|a|, |b|), or |a - b| when both vanish."""
    scale = max(abs(a), abs(b))
    if scale == 0:
        return abs(a - b)
    return abs(a - b) / scale
