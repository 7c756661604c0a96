"""Closed-form eigenvalues of the Dirac blocks, used as regression targets.

Keys are ``(a, b, c)`` labels.  Strings are sympy-parsable; ``evaluate``
turns them into floats.  Candidates from ``LISTED_CANDIDATES`` missing
from a spectrum table have empty blocks.
"""
from __future__ import annotations

import re
from functools import lru_cache

import sympy as sp

UNTWISTED_T0 = {
    (0, 0, 0): ("-7/2",),
    (0, 0, 2): ("9/2",),
    (1, 0, 0): ("(-3-2*sqrt(161))/6", "(-3+2*sqrt(161))/6"),
    (0, 1, 1): ("(-3-8*sqrt(11))/6", "(-3+8*sqrt(11))/6", "-23/6"),
    (0, 2, 0): ("9/2", "-25/6"),
}

TWISTED_T0 = {
    (0, 0, 0): ("1/2",),
    (0, 0, 2): ("(-1-2*sqrt(17))/2", "(-1+2*sqrt(17))/2"),
    (1, 0, 0): ("19/6", "-17/6"),
    (0, 1, 1): ("(-3-16*sqrt(2))/6", "(-3+16*sqrt(2))/6", "(1-8*sqrt(6))/6", "(1+8*sqrt(6))/6"),
    (0, 2, 0): ("(-1-2*sqrt(17))/2", "(-1+2*sqrt(17))/2", "-7/2"),
}

# Scalar value of the squared block at t = 1/3.  Entries flagged ``True``
# are the expected closed forms; the others follow from -c + 1/9 (twisted)
# or -c + 49/9 (untwisted).
UNTWISTED_SQUARE = {
    (0, 0, 0): ("49/9", False),
    (0, 0, 2): ("169/9", False),
    (1, 0, 0): ("43/3", True),
    (0, 1, 1): ("16", True),
    (0, 2, 0): ("169/9", True),
}

TWISTED_SQUARE = {
    (0, 0, 0): ("1/9", False),
    (0, 0, 2): ("121/9", True),
    (1, 0, 0): ("9", True),
    (0, 1, 1): ("32/3", True),
    (0, 2, 0): ("121/9", True),
}

LISTED_CANDIDATES = ((0, 0, 0), (1, 0, 0), (0, 0, 1), (0, 1, 0),
                    (1, 0, 1), (0, 1, 1), (0, 2, 0), (0, 0, 2))

SQUARE_SHIFT = {"twisted": sp.Rational(1, 9), "untwisted": sp.Rational(49, 9)}


@lru_cache(maxsize=None)
def evaluate(expr: str) -> float:
    return float(sp.sympify(expr))


def pretty(expr: str) -> str:
    """Compact form for display: ``(-1+2*sqrt(17))/2`` becomes ``(-1+2√17)/2``."""
    return re.sub(r"\*?sqrt\((\d+)\)", r"√\1", expr)


def spectrum_table(twist: str) -> dict:
    return TWISTED_T0 if twist == "twisted" else UNTWISTED_T0


def square_table(twist: str) -> dict:
    return TWISTED_SQUARE if twist == "twisted" else UNTWISTED_SQUARE
