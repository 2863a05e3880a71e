"""Closed-form topological lower bounds on periodic orbit counts.

For an odd prime r and dimension d >= 3, the cyclic configuration space of r
consecutively distinct points on the (d-1)-sphere, modulo cyclic relabeling,
has mod-r cohomology of dimension 1 in every degree from 0 to
(r-1)(d-2)+1, except on a set of paired degrees where it is 2:

    d even:  {l(d-2), l(d-2)+1 : 1 <= l <= r-2}
    d odd:   {2l(d-2), 2l(d-2)+1 : 1 <= l <= (r-3)/2}

The Betti sum is the generic (Morse) orbit-count bound; the category bound
(r-1)(d-2)+1 holds without genericity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameters

__all__ = ["CohomologyProfile", "betti_numbers", "cat_lower_bound", "orbit_lower_bound"]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def _validate(d: int, r: int) -> None:
    if not isinstance(d, int) or not isinstance(r, int):
        raise InvalidParameters("d and r must be integers")
    if d < 3:
        raise InvalidParameters("dimension d must be >= 3")
    if r < 3 or r % 2 == 0 or not _is_prime(r):
        raise InvalidParameters("period r must be an odd prime >= 3")


@dataclass(frozen=True)
class CohomologyProfile:
    """Betti numbers of the reduced cyclic configuration space and derived bounds."""

    d: int
    r: int
    betti: tuple[int, ...]
    total: int
    alternating_sum: int
    cat_lower: int
    bound_general: int
    bound_generic: int


def betti_numbers(d: int, r: int) -> CohomologyProfile:
    """Betti profile in degrees 0 .. (r-1)(d-2)+1 with derived bounds."""
    _validate(d, r)
    top = (r - 1) * (d - 2) + 1
    doubled: set[int] = set()
    if d % 2 == 0:
        for ell in range(1, r - 1):
            doubled.add(ell * (d - 2))
            doubled.add(ell * (d - 2) + 1)
    else:
        for ell in range(1, (r - 3) // 2 + 1):
            doubled.add(2 * ell * (d - 2))
            doubled.add(2 * ell * (d - 2) + 1)
    betti = tuple(2 if n in doubled else 1 for n in range(top + 1))
    total = sum(betti)
    alternating = sum(b if n % 2 == 0 else -b for n, b in enumerate(betti))
    return CohomologyProfile(
        d=d, r=r, betti=betti, total=total, alternating_sum=alternating,
        cat_lower=cat_lower_bound(d, r),
        bound_general=orbit_lower_bound(d, r, generic=False),
        bound_generic=orbit_lower_bound(d, r, generic=True),
    )


def cat_lower_bound(d: int, r: int) -> int:
    """Category lower bound (r-1)(d-2)+1 for the reduced configuration space."""
    _validate(d, r)
    return (r - 1) * (d - 2) + 1


def orbit_lower_bound(d: int, r: int, generic: bool) -> int:
    """Lower bound on the number of cyclic classes of r-periodic orbits.

    Without genericity the bound is the category bound; for tables whose
    cyclic length function is Morse it is the Betti sum, (r-1)d for even d
    and (r-1)(d-1) for odd d.
    """
    _validate(d, r)
    if not generic:
        return (r - 1) * (d - 2) + 1
    return (r - 1) * d if d % 2 == 0 else (r - 1) * (d - 1)
