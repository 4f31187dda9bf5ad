"""Largest-eigenvalue law of a complex central Wishart matrix, exactly.

For an a x b (a = min dimension, b = max dimension) complex Gaussian channel
with unit-variance entries, the largest eigenvalue of the Gram matrix has a
density expressible as a signed mixture of Erlang-type terms

    f(x) = sum_{n=1..a} sum_{m=|b-a|..(a+b)n-2n^2}  w[n,m] * n^{m+1}/m! * x^m * e^{-n x}

with exact rational weights ``w[n, m]`` that sum to one.  This module builds
the density symbolically (determinant of a matrix of lower incomplete gamma
functions, then one derivative) and peels the weights off term by term with
exact rational arithmetic; there is no fitting and no floating point.

The weight table is the single data object the closed-form outage
expressions consume, so it also carries a lossless text cache format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from pathlib import Path
from typing import Dict

from .exppoly import ExpPoly, Key, determinant

ALGORITHM_VERSION = "exact-extraction-v1"
CACHE_VERSION = 1


class NonzeroResidualError(RuntimeError):
    """The extraction loop did not consume the entire density.

    This is a hard failure: it means the index bookkeeping or the symbolic
    algebra is wrong, never a numerical artefact.
    """


class CacheFormatError(ValueError):
    """Cache file is malformed or truncated."""


class CacheVersionError(CacheFormatError):
    """Cache file was written by an incompatible format version."""


class CacheChecksumError(CacheFormatError):
    """Cache file content does not match its checksum line."""


@dataclass(frozen=True)
class WishartDims:
    """Dimensions of the underlying Gaussian matrix: a = min, b = max."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 1:
            raise ValueError(f"min dimension must be >= 1, got a={self.a}")
        if self.b < self.a:
            raise ValueError(f"need b >= a, got a={self.a}, b={self.b}")

    @classmethod
    def of_matrix(cls, n1: int, n2: int) -> "WishartDims":
        """Dims for an n1 x n2 channel matrix (order-insensitive)."""
        return cls(min(n1, n2), max(n1, n2))


def normalization_constant(dims: WishartDims) -> Fraction:
    """Exact 1 / prod_{i=1..a} (a-i)! (b-i)!."""
    a, b = dims.a, dims.b
    denom = 1
    for i in range(1, a + 1):
        denom *= factorial(a - i) * factorial(b - i)
    return Fraction(1, denom)


def lower_gamma_poly(s: int) -> ExpPoly:
    """Lower incomplete gamma with integer shape s >= 1, as an ExpPoly.

    Equals (s-1)! * (1 - e^{-x} * sum_{j<s} x^j / j!).
    """
    if s < 1:
        raise ValueError(f"shape must be >= 1, got {s}")
    fs = factorial(s - 1)
    terms: Dict[Key, Fraction] = {(0, 0): Fraction(fs)}
    for j in range(s):
        terms[(1, j)] = Fraction(-fs, factorial(j))
    return ExpPoly(terms)


def gram_entries(dims: WishartDims) -> list[list[ExpPoly]]:
    """The a x a matrix whose determinant is (up to normalization) the CDF.

    Entry (i, j), 1-based, is the lower incomplete gamma of shape
    b - a + i + j - 1.
    """
    a, b = dims.a, dims.b
    return [
        [lower_gamma_poly(b - a + i + j - 1) for j in range(1, a + 1)]
        for i in range(1, a + 1)
    ]


def max_eig_cdf(dims: WishartDims) -> ExpPoly:
    """Exact CDF of the largest eigenvalue."""
    return determinant(gram_entries(dims)) * normalization_constant(dims)


def max_eig_density(dims: WishartDims) -> ExpPoly:
    """Exact density of the largest eigenvalue (derivative of the CDF)."""
    return max_eig_cdf(dims).differentiate()


@dataclass(frozen=True)
class CoeffTable:
    """Signed Erlang-mixture weights of a largest-eigenvalue law.

    ``entries[(n, m)]`` is the weight of the component with density
    n^{m+1}/m! * x^m * e^{-n x}.  Keys cover exactly the ranges
    n = 1..a, m = b-a..(a+b)n-2n^2 (zero weights included), and the weights
    sum to one exactly.  Immutable after construction.
    """

    dims: WishartDims
    norm_const: Fraction
    entries: Dict[Key, Fraction]
    provenance: str = ALGORITHM_VERSION

    def total(self) -> Fraction:
        """Exact sum of all weights (one for a valid table)."""
        return sum(self.entries.values(), Fraction(0))

    def density(self) -> ExpPoly:
        """Rebuild the density ExpPoly from the weights (exact)."""
        terms: Dict[Key, Fraction] = {}
        for (n, m), w in self.entries.items():
            if w:
                terms[(n, m)] = w * Fraction(n ** (m + 1), factorial(m))
        return ExpPoly(terms)


def expected_keys(dims: WishartDims) -> list[Key]:
    """Index ranges of the mixture, in extraction order (n up, m down)."""
    a, b = dims.a, dims.b
    keys = []
    for n in range(1, a + 1):
        for m in range((a + b - 2 * n) * n, b - a - 1, -1):
            keys.append((n, m))
    return keys


def extract_coefficients(dims: WishartDims) -> CoeffTable:
    """Compute the exact mixture weights for the given dimensions."""
    density = max_eig_density(dims)
    entries = _extract_from_density(density, dims)
    return CoeffTable(
        dims=dims,
        norm_const=normalization_constant(dims),
        entries=entries,
    )


def _extract_from_density(density: ExpPoly, dims: WishartDims) -> Dict[Key, Fraction]:
    """Peel the density into mixture weights; the residual must vanish.

    Visits keys with n ascending and m descending, reads the stored
    coefficient c at (n, m), records the weight c * m! / n^{m+1}, and
    subtracts the term.  A nonzero residual after the sweep is a hard error.
    """
    residual = density
    entries: Dict[Key, Fraction] = {}
    for n, m in expected_keys(dims):
        c = residual.coeff(n, m)
        entries[(n, m)] = c * Fraction(factorial(m), n ** (m + 1))
        if c:
            residual = residual - ExpPoly.term(n, m, c)
    if not residual.is_zero:
        raise NonzeroResidualError(
            f"extraction residual is nonzero for dims a={dims.a}, b={dims.b}: "
            f"{residual!r}"
        )
    return entries


@lru_cache(maxsize=None)
def cached_table(dims: WishartDims) -> CoeffTable:
    """Process-wide memoised extract_coefficients."""
    return extract_coefficients(dims)


# -- lossless text cache ----------------------------------------------------
#
# One JSON line with decimal num/den strings, then one checksum line:
#
#   {"version": 1, "a": 2, "b": 3, "K_ab": "1/2", "entries": [...], ...}
#   sha256:<hex digest of the JSON line, utf-8>


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _parse_frac(s: str) -> Fraction:
    num, _, den = s.partition("/")
    if not den:
        raise CacheFormatError(f"bad rational literal {s!r}")
    return Fraction(int(num), int(den))


def save_table(table: CoeffTable, path: str | Path) -> None:
    """Write a table to disk losslessly (decimal rationals + checksum)."""
    payload = {
        "version": CACHE_VERSION,
        "a": table.dims.a,
        "b": table.dims.b,
        "K_ab": _frac_str(table.norm_const),
        "entries": [
            {"n": n, "m": m, "D": _frac_str(w)}
            for (n, m), w in sorted(table.entries.items(), key=lambda e: (e[0][0], -e[0][1]))
        ],
        "provenance": table.provenance,
    }
    body = json.dumps(payload, separators=(",", ":"), sort_keys=True)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    Path(path).write_text(body + "\n" + "sha256:" + digest + "\n", encoding="utf-8")


def load_table(path: str | Path) -> CoeffTable:
    """Read a table back; raises on version, checksum, or schema problems."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2 or not lines[1].startswith("sha256:"):
        raise CacheFormatError(f"{path}: expected one payload line and one checksum line")
    body, checksum_line = lines
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if checksum_line != "sha256:" + digest:
        raise CacheChecksumError(f"{path}: checksum mismatch")
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise CacheFormatError(f"{path}: invalid payload: {exc}") from exc
    version = payload.get("version")
    if version != CACHE_VERSION:
        raise CacheVersionError(f"{path}: version {version!r}, expected {CACHE_VERSION}")
    try:
        dims = WishartDims(payload["a"], payload["b"])
        norm = _parse_frac(payload["K_ab"])
        entries = {
            (int(e["n"]), int(e["m"])): _parse_frac(e["D"]) for e in payload["entries"]
        }
        provenance = payload.get("provenance", "")
    except (KeyError, TypeError, ValueError) as exc:
        raise CacheFormatError(f"{path}: malformed fields: {exc}") from exc
    if sorted(entries) != sorted(expected_keys(dims)):
        raise CacheFormatError(f"{path}: entry index set does not match dims")
    return CoeffTable(dims=dims, norm_const=norm, entries=entries, provenance=provenance)
