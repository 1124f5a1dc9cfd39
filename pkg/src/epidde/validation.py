"""Integrator self-check on y'(t) = -y(t-1) with y ≡ 1 for t ≤ 0.

On each interval [k, k+1] the exact solution is a polynomial of degree k+1,
obtained by integrating the previous piece (method of steps).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from .dde import DelayedVectorField, constant_history, integrate

__all__ = ["CheckResult", "exact_pieces", "exact_solution", "run_validation"]


def exact_pieces(n: int) -> list[Polynomial]:
    """Polynomials for [0,1], [1,2], …, [n-1,n]."""
    prev = Polynomial([1.0])
    start = 1.0
    out = []
    for k in range(n):
        # y(t) = y(k) - ∫_k^t prev(s - 1) ds
        shifted = prev(Polynomial([-1.0, 1.0]))
        anti = shifted.integ()
        piece = start - (anti - anti(float(k)))
        out.append(piece)
        start = piece(float(k + 1))
        prev = piece
    return out


def exact_solution(t, pieces: list[Polynomial] | None = None):
    t = np.asarray(t, dtype=float)
    pieces = pieces or exact_pieces(int(math.ceil(float(t.max()))) or 1)
    idx = np.clip(np.floor(t).astype(int), 0, len(pieces) - 1)
    out = np.ones_like(t)
    for k, poly in enumerate(pieces):
        sel = (idx == k) & (t >= 0)
        out[sel] = poly(t[sel])
    return out


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _solve(step: float, t_end: float = 4.0):
    field = DelayedVectorField(1, (1.0,), lambda t, x, d: -d[0])
    return integrate(field, constant_history([1.0]), 0.0, t_end, step)


def run_validation() -> list[CheckResult]:
    pieces = exact_pieces(4)
    coarse, fine = _solve(0.01), _solve(0.005)
    y1 = coarse(1.0)[0]
    y2 = coarse(2.0)[0]
    # sup-norm error on [0, 4] sampled off the grid, so the dense output counts
    sample = np.linspace(0.0, 4.0, 4001) + 0.000371
    sample[-1] = 4.0
    exact = exact_solution(sample, pieces)
    err_c = max(abs(coarse(s)[0] - e) for s, e in zip(sample, exact))
    err_f = max(abs(fine(s)[0] - e) for s, e in zip(sample, exact))
    ratio = err_c / err_f if err_f > 0 else math.inf
    return [
        CheckResult("y(1) = 0", bool(abs(y1) < 1e-8), f"|y(1)| = {abs(y1):.3e}"),
        CheckResult("y(2) = -1/2", bool(abs(y2 + 0.5) < 1e-6),
                    f"|y(2) + 0.5| = {abs(y2 + 0.5):.3e}"),
        CheckResult("max error on [0,4]", bool(err_c < 1e-6), f"max error = {err_c:.3e}"),
        CheckResult("step halving reduces error >= 8x", bool(ratio >= 8),
                    f"ratio = {ratio:.2f}"),
    ]
