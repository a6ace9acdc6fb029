"""Charge equilibration: charges from per-atom electronegativity and hardness.

Minimising ``sum_i e_i q_i + s_i q_i**2 / 2`` subject to ``sum_i q_i = Q``
has the stationary point::

    lam = (Q + sum_j e_j / s_j) / sum_j 1 / s_j
    q_i = (lam - e_i) / s_i

which is the minimum when every s_i > 0.  Mixed-sign hardness is allowed;
the formula then gives a saddle point that still satisfies the constraint.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from graphqeq.errors import InvalidArgument, OracleDomainError, SingularHardness
from graphqeq.molio import ChargeResult

SINGULAR_EPS = 1e-10


@dataclass(frozen=True)
class QeqProblem:
    e: np.ndarray
    s: np.ndarray
    net_charge: int

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.float64).ravel()
        s = np.asarray(self.s, dtype=np.float64).ravel()
        if len(e) == 0 or len(e) != len(s):
            raise InvalidArgument(f"e and s must have the same non-zero length, got {len(e)} and {len(s)}")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(s))):
            raise InvalidArgument("e and s must be finite")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "s", s)

    def __len__(self):
        return len(self.e)


def _multiplier(e: np.ndarray, s: np.ndarray, net_charge: float, eps: float, offset: int = 0):
    small = np.abs(s) <= eps
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise SingularHardness(f"hardness of atom {offset + i} is {s[i]:.3g}, too close to zero", atom_index=offset + i)
    inv_s = 1.0 / s
    total_inv = math.fsum(inv_s)
    if abs(total_inv) <= eps:
        raise SingularHardness(f"sum of 1/s is {total_inv:.3g}; the constrained problem is singular")
    lam = (net_charge + math.fsum(e * inv_s)) / total_inv
    return lam, inv_s, total_inv


def solve(problem: QeqProblem, eps: float = SINGULAR_EPS) -> ChargeResult:
    e, s, Q = problem.e, problem.s, problem.net_charge
    if len(e) == 1:
        return ChargeResult(np.array([float(Q)]), Q)
    lam, inv_s, _ = _multiplier(e, s, Q, eps)
    return ChargeResult((lam - e) * inv_s, Q)


def solve_segments(
    e: np.ndarray,
    s: np.ndarray,
    net_charges: Sequence[int],
    segments: Sequence[tuple[int, int]],
    eps: float = SINGULAR_EPS,
) -> list[ChargeResult]:
    """Solve every molecule of a batch; ``segments`` are (start, end) node ranges."""
    e = np.asarray(e, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    results = []
    for (start, end), Q in zip(segments, net_charges):
        if end - start == 1:
            results.append(ChargeResult(np.array([float(Q)]), Q))
            continue
        es, ss = e[start:end], s[start:end]
        lam, inv_s, _ = _multiplier(es, ss, Q, eps, offset=start)
        results.append(ChargeResult((lam - es) * inv_s, Q))
    return results


def solve_vjp(e: np.ndarray, s: np.ndarray, charges: np.ndarray, grad_q: np.ndarray):
    """Pull dL/dq back to (dL/de, dL/ds) for one molecule.

    With a = 1/s, A = sum a and G = sum g a, the closed form gives
    dL/de_i = a_i (G/A - g_i) and dL/ds_i = q_i dL/de_i.
    """
    if len(e) == 1:
        return np.zeros(1), np.zeros(1)
    inv_s = 1.0 / s
    mean_g = math.fsum(grad_q * inv_s) / math.fsum(inv_s)
    grad_e = inv_s * (mean_g - grad_q)
    return grad_e, charges * grad_e


def charging_energy(problem: QeqProblem, charges) -> float:
    q = np.asarray(charges, dtype=np.float64).ravel()
    if len(q) != len(problem):
        raise InvalidArgument(f"{len(q)} charges for a {len(problem)}-atom problem")
    return math.fsum(problem.e * q + 0.5 * problem.s * q * q)


def oracle_solve(problem: QeqProblem, tol: float = 1e-10, max_iter: int = 1_000_000) -> np.ndarray:
    """Projected gradient descent on the constraint plane (convex case only).

    Starts from the uniform split Q/N and steps by -grad/max(s) with the
    gradient projected onto sum(q) = 0, until the projected gradient norm
    drops below ``tol``.  Each charge then sits within tol/min(s) of the
    exact minimiser.
    """
    e, s = problem.e, problem.s
    if np.any(s <= 0):
        raise OracleDomainError("oracle_solve needs every hardness to be positive")
    n = len(e)
    q = np.full(n, problem.net_charge / n)
    step = 1.0 / s.max()
    for _ in range(max_iter):
        g = e + s * q
        g -= g.mean()
        if np.linalg.norm(g) < tol:
            return q
        q = q - step * g
    raise OracleDomainError(f"oracle did not converge to {tol:g} in {max_iter} iterations")
