"""Krawtchouk polynomials of the Hamming scheme H(d, n).

K_i(j) is the coefficient of s^i in (1 + (n-1)s)^(d-j) (1 - s)^j.  Both the
explicit alternating sum and the generating-function convolution are carried
out in Python integers, so they are exact for every d; conversion to float
happens once, at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError
from .graph import GraphSpec, _as_vertex


def _check_index(g: GraphSpec, name: str, v: int) -> None:
    if not 0 <= v <= g.d:
        raise DomainError(f"{name}={v} outside [0, {g.d}]")


def kraw_exact(g: GraphSpec, i: int, j: int) -> int:
    """K_i(j) as an exact integer, from the explicit finite sum."""
    _check_index(g, "i", i)
    _check_index(g, "j", j)
    return _kraw_int(g.d, g.n, i, j)


@lru_cache(maxsize=1 << 16)
def _kraw_int(d: int, n: int, i: int, j: int) -> int:
    total = 0
    for l in range(max(0, i + j - d), min(i, j) + 1):
        term = (n - 1) ** (i - l) * math.comb(j, l) * math.comb(d - j, i - l)
        total += -term if l % 2 else term
    return total


def kraw(g: GraphSpec, i: int, j: int) -> float:
    return float(kraw_exact(g, i, j))


def kraw_signed_log(g: GraphSpec, i: int, j: int) -> tuple[int, float]:
    """(sign, log|K_i(j)|) for values too large for a float; sign 0 means K = 0."""
    k = kraw_exact(g, i, j)
    if k == 0:
        return 0, -math.inf
    return (1 if k > 0 else -1), _log_int(abs(k))


def _log_int(k: int) -> float:
    shift = max(k.bit_length() - 900, 0)
    return math.log(k >> shift) + shift * math.log(2)


def kraw_row_genfun_exact(g: GraphSpec, j: int) -> list[int]:
    """Coefficients of s^0..s^d in (1+(n-1)s)^(d-j) (1-s)^j by polynomial convolution."""
    _check_index(g, "j", j)
    poly = [1]
    for factor in [(1, g.n - 1)] * (g.d - j) + [(1, -1)] * j:
        nxt = [0] * (len(poly) + 1)
        for k, c in enumerate(poly):
            nxt[k] += c * factor[0]
            nxt[k + 1] += c * factor[1]
        poly = nxt
    return poly


def kraw_row_genfun(g: GraphSpec, j: int) -> list[float]:
    return [float(c) for c in kraw_row_genfun_exact(g, j)]


@dataclass(frozen=True)
class KrawTable:
    """values[i][j] = K_i(j)."""

    d: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


def kraw_table(g: GraphSpec) -> KrawTable:
    vals = np.array([[kraw(g, i, j) for j in range(g.d + 1)] for i in range(g.d + 1)])
    return KrawTable(g.d, g.n, vals)


def kraw_over_kappa(g: GraphSpec, i: int, j: int) -> float:
    """K_i(j) / kappa_i, correctly rounded (bounded by 1 in modulus)."""
    return kraw_exact(g, i, j) / (math.comb(g.d, i) * (g.n - 1) ** i)


def radial_fourier(g: GraphSpec, f: Sequence[complex], x) -> complex:
    """sum_i f(i) K_i(rho(x)): the character sum of a radial function, evaluated at x."""
    f = list(f)
    if len(f) != g.d + 1:
        raise DomainError(f"radial function needs {g.d + 1} entries, got {len(f)}")
    j = sum(v != 0 for v in _as_vertex(g, x).digits)
    return complex(sum(complex(f[i]) * kraw(g, i, j) for i in range(g.d + 1)))


def radial_fourier_bruteforce(g: GraphSpec, f: Sequence[complex], x) -> complex:
    """Direct vertex sum sum_y zeta^(x.y) f(rho(y)); the oracle for radial_fourier."""
    from .graph import _root_table, digit_array

    f = np.asarray(list(f), dtype=complex)
    if f.shape != (g.d + 1,):
        raise DomainError(f"radial function needs {g.d + 1} entries, got {f.size}")
    xv = _as_vertex(g, x)
    dig = digit_array(g)
    phases = _root_table(g.n)[(dig @ np.array(xv.digits)) % g.n]
    rho = np.count_nonzero(dig, axis=1)
    return complex(np.sum(phases * f[rho]))
