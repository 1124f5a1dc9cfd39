"""Reproduction number, equilibria and delay-dependent local stability.

Linearising the model about an equilibrium gives a characteristic function
that factors as

    DFE:     (λ+μ)³ · (λ + μ + δα + ρ(1-α)e^{-κλ}) · (λ² + d₁λ + d₂ + e^{-λτ}(e₁λ + e₂))
    endemic: (λ+μ)² · (λ + μ + δα + ρ(1-α)e^{-κλ}) · (λ³ + a₁λ² + a₂λ + a₃ + e^{-λτ}(b₀λ² + b₁λ + b₂))

The coefficient families below are evaluated in closed form. The critical
delay of the disease-free state is where a root pair of the last factor
crosses the imaginary axis; because e₁ and e₂ themselves carry e^{-γτ}, the
crossing delay is found self-consistently.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .model import ModelParams, ParameterError, State

log = logging.getLogger(__name__)

__all__ = [
    "CriticalDelay",
    "DfeCoefficients",
    "EndemicCoefficients",
    "StabilityReport",
    "Transversality",
    "characteristic",
    "characteristic_determinant",
    "classify_dfe",
    "classify_endemic",
    "critical_delay",
    "critical_delay_by_root_tracking",
    "characteristic_roots",
    "transversality",
    "delayed_jacobian",
    "dfe_coefficients",
    "disease_free_equilibrium",
    "endemic_coefficients",
    "endemic_equilibrium",
    "endemic_exists",
    "leading_root",
    "omega_star",
    "quarantine_branch_stable",
    "reproduction_number",
]


def _removal_denominator(params: ModelParams) -> float:
    return (params.epsilon + params.mu) * (params.gamma + params.isolation_rate + params.mu)


def reproduction_number(params: ModelParams, beta: float) -> float:
    """R₀ = βε / ((ε+μ)(γ + p e^{-γτ} + μ)), the spectral radius of FV⁻¹."""
    denom = _removal_denominator(params)
    if denom <= 0:
        raise ParameterError("(epsilon+mu)(gamma + p e^{-gamma tau} + mu) must be positive")
    return beta * params.epsilon / denom


def disease_free_equilibrium() -> State:
    return State(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def endemic_exists(params: ModelParams, beta: float) -> bool:
    """True iff (ε+μ)(γ + p e^{-γτ} + μ) < βε, i.e. E* has E > 0.

    With Ω ≠ μ the condition generalises to S* < Ω/μ.
    """
    if params.omega is None or params.birth_rate == params.mu:
        return _removal_denominator(params) < beta * params.epsilon
    if beta * params.epsilon <= 0 or params.mu <= 0:
        return False
    s_star = _removal_denominator(params) / (beta * params.epsilon)
    return s_star < params.birth_rate / params.mu


def endemic_equilibrium(params: ModelParams, beta: float) -> State | None:
    """Closed-form interior equilibrium, or ``None`` when it does not exist."""
    if not endemic_exists(params, beta):
        return None
    mu, eps, gam = params.mu, params.epsilon, params.gamma
    if mu <= 0:
        raise ParameterError("the endemic equilibrium needs mu > 0")
    pe = params.isolation_rate
    release = params.rho * (1.0 - params.alpha)
    dying = params.delta * params.alpha
    s = _removal_denominator(params) / (beta * eps)
    e = (params.birth_rate - mu * s) / (eps + mu)
    i = eps * e / (mu + gam + pe)
    q = pe * i / (release + dying + mu)
    r = (gam * i + release * q) / mu
    d = dying * q / mu
    return State(s, e, i, q, r, d)


# ---------------------------------------------------------------------------
# coefficient families


@dataclass(frozen=True)
class DfeCoefficients:
    d1: float
    d2: float
    e1: float
    e2: float
    f1: float
    f2: float


@dataclass(frozen=True)
class EndemicCoefficients:
    """Endemic-state coefficients.

    ``c1..c3`` follow the reference expressions, in which a₃ also multiplies
    the delayed terms. :meth:`sextic` gives the
    coefficients of |P(iω)|² − |Q(iω)|² for comparison.
    """

    a1: float
    a2: float
    a3: float
    b0: float
    b1: float
    b2: float
    c1: float
    c2: float
    c3: float

    def sextic(self) -> tuple[float, float, float]:
        a1, a2, a3, b0, b1, b2 = self.a1, self.a2, self.a3, self.b0, self.b1, self.b2
        return (a1 * a1 - 2 * a2 - b0 * b0,
                a2 * a2 - 2 * a1 * a3 + 2 * b0 * b2 - b1 * b1,
                a3 * a3 - b2 * b2)


def dfe_coefficients(params: ModelParams, beta: float, tau: float | None = None) -> DfeCoefficients:
    """d₁, d₂, e₁, e₂ and f₁, f₂ about E₀; ``tau`` overrides ``params.tau``."""
    mu, eps, gam = params.mu, params.epsilon, params.gamma
    tau = params.tau if tau is None else tau
    d1 = 2 * mu + eps + gam
    d2 = (gam + mu) * (eps + mu) - eps * beta
    e1 = params.p * math.exp(-gam * tau)
    e2 = e1 * (mu + eps)
    return DfeCoefficients(d1, d2, e1, e2, d1 * d1 - 2 * d2 - e1 * e1, d2 * d2 - e2 * e2)


def endemic_coefficients(params: ModelParams, beta: float) -> EndemicCoefficients | None:
    eq = endemic_equilibrium(params, beta)
    if eq is None:
        return None
    mu, eps, gam = params.mu, params.epsilon, params.gamma
    bi = beta * eq.i
    bs = beta * eq.s
    pe = params.isolation_rate
    a1 = 3 * mu + eps + gam + bi
    a2 = (gam + mu) * (eps + mu) + (gam + eps + 2 * mu) * (bi + mu) - eps * bs
    a3 = (gam + mu) * (eps + mu) * (bi + mu) - eps * mu * bs
    b0 = pe
    b1 = pe * (2 * mu + eps + bi)
    b2 = pe * (eps + mu) * (mu + bi)
    c1 = a1 ** 2 - 2 * a2 - a3 ** 2 * b0 ** 2
    c2 = a2 ** 2 + 2 * a3 ** 2 * b0 * b2 - a3 ** 2 * b1 ** 2 - 2 * a1 * a3
    c3 = a3 ** 2 * (1 - b2 ** 2)
    return EndemicCoefficients(a1, a2, a3, b0, b1, b2, c1, c2, c3)


def quarantine_branch_stable(params: ModelParams) -> bool:
    """(μ+δα)² > ρ²(1-α)²: the quarantine factor has no imaginary-axis roots."""
    lhs = (params.mu + params.delta * params.alpha) ** 2
    rhs = params.rho ** 2 * (1 - params.alpha) ** 2
    return lhs > rhs


def omega_star(coeffs: DfeCoefficients) -> float | None:
    """Positive root of ω⁴ + f₁ω² + f₂ = 0.

    Unique when f₂ < 0. If f₂ > 0 and f₁ < 0 there can be two; the larger is
    returned. ``None`` when there is no positive root.
    """
    f1, f2 = coeffs.f1, coeffs.f2
    disc = f1 * f1 - 4 * f2
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    # stable pair of quadratic roots
    q = -0.5 * (f1 + math.copysign(sq, f1)) if (f1 != 0 or sq != 0) else 0.0
    roots = [q] if q == 0 else [q, f2 / q]
    positive = [u for u in roots if u > 0]
    if not positive:
        return None
    return math.sqrt(max(positive))


def _crossing_phase(c: DfeCoefficients, w: float) -> float:
    """ωτ (mod 2π) at which λ = iω solves the τ-factor, in [0, 2π)."""
    w2 = w * w
    den = c.e1 ** 2 * w2 + c.e2 ** 2
    cos_v = ((c.e2 - c.d1 * c.e1) * w2 - c.d2 * c.e2) / den
    sin_v = w * (c.d1 * c.e2 - c.e1 * c.d2 + c.e1 * w2) / den
    theta = math.atan2(sin_v, cos_v)
    return theta if theta >= 0 else theta + 2 * math.pi


class CriticalDelay(NamedTuple):
    tau_star: float | None
    omega_star: float | None
    iterations: int
    diagnostic: str = ""

    @property
    def found(self) -> bool:
        return self.tau_star is not None


def critical_delay(params: ModelParams, beta: float, branch: int = 0, tol: float = 1e-8,
                   max_iter: int = 200) -> CriticalDelay:
    """Self-consistent critical delay τ* of the disease-free state.

    Iterates τ ← (θ(τ) + 2πk)/ω*(τ) from τ = 0, where ω* and the crossing
    phase θ are evaluated with e₁, e₂ at the current τ. ``branch`` selects k.
    The phase is the principal arccos whenever the matching sine is
    nonnegative (the usual case) and 2π − arccos otherwise.
    """
    tau = 0.0
    w = None
    for k in range(1, max_iter + 1):
        c = dfe_coefficients(params, beta, tau)
        if c.f2 >= 0:
            return CriticalDelay(None, None, k, f"d2^2 >= e2^2 at tau = {tau:.6g}")
        w = omega_star(c)
        if w is None:
            return CriticalDelay(None, None, k, f"no positive omega at tau = {tau:.6g}")
        nxt = (_crossing_phase(c, w) + 2 * math.pi * branch) / w
        if not math.isfinite(nxt):
            return CriticalDelay(None, None, k, "iteration produced a non-finite delay")
        if abs(nxt - tau) < tol:
            c = dfe_coefficients(params, beta, nxt)
            if c.f2 >= 0:
                return CriticalDelay(None, None, k, "d2^2 >= e2^2 at the converged delay")
            return CriticalDelay(nxt, omega_star(c), k)
        tau = nxt
    return CriticalDelay(None, None, max_iter, "fixed-point iteration did not converge")


class Transversality(NamedTuple):
    x: float
    y: float
    z: float
    holds: bool


def transversality(params: ModelParams, beta: float, omega_star: float,
                   tau_star: float) -> Transversality:
    """The x, y, z quotients of the crossing-direction argument.

    ``holds`` is x + y > 0 and x + y > z.
    """
    g, w = params.gamma, omega_star
    g2, w2 = g * g, w * w
    c = dfe_coefficients(params, beta, tau_star)
    d1, d2 = c.d1, c.d2
    me = params.mu + params.epsilon
    base = (g2 - w2) ** 2 + 4 * w2 * g2
    x = (d1 * (-g2 + w2) * (d2 - w2) + 2 * w2 * d1 * g * (2 + d1)) / (
        base * ((d2 - w2) ** 2 + d1 * w2))
    y = ((g2 - w2) * me - 2 * w2 * g) / (base * (me * me + w2))
    z = tau_star * g / (g2 + w2)
    return Transversality(x, y, z, bool(x + y > 0 and x + y > z))


# ---------------------------------------------------------------------------
# characteristic function


def _quarantine_factor(lam, params: ModelParams):
    b = params.rho * (1 - params.alpha)
    ex = np.exp(-params.kappa * lam)
    value = lam + params.mu + params.delta * params.alpha + b * ex
    deriv = 1 - params.kappa * b * ex
    return value, deriv


def _delay_factor(lam, params: ModelParams, beta: float, equilibrium: str):
    tau = params.tau
    ex = np.exp(-tau * lam)
    if equilibrium == "dfe":
        c = dfe_coefficients(params, beta)
        poly = lam * lam + c.d1 * lam + c.d2
        dpoly = 2 * lam + c.d1
        q = c.e1 * lam + c.e2
        dq = c.e1
    else:
        c = endemic_coefficients(params, beta)
        if c is None:
            raise ParameterError("endemic equilibrium does not exist")
        poly = ((lam + c.a1) * lam + c.a2) * lam + c.a3
        dpoly = (3 * lam + 2 * c.a1) * lam + c.a2
        q = (c.b0 * lam + c.b1) * lam + c.b2
        dq = 2 * c.b0 * lam + c.b1
    return poly + ex * q, dpoly + ex * (dq - tau * q)


def _check_equilibrium(equilibrium: str) -> str:
    key = equilibrium.lower()
    if key in ("dfe", "e0", "disease_free"):
        return "dfe"
    if key in ("endemic", "e*", "estar"):
        return "endemic"
    raise ValueError(f"unknown equilibrium {equilibrium!r}")


def characteristic(lam, params: ModelParams, beta: float, equilibrium: str = "dfe"):
    """χ(λ) from the factored coefficient form (vectorised over ``lam``)."""
    eq = _check_equilibrium(equilibrium)
    lam = np.asarray(lam, dtype=complex)
    power = 3 if eq == "dfe" else 2
    quarantine, _ = _quarantine_factor(lam, params)
    main, _ = _delay_factor(lam, params, beta, eq)
    return (lam + params.mu) ** power * quarantine * main


def delayed_jacobian(lam: complex, params: ModelParams, beta: float, state) -> np.ndarray:
    """Linearisation about ``state`` with e^{-λτ}, e^{-λκ} on the delayed entries."""
    s, e, i, q, r, d = state
    mu, eps, gam = params.mu, params.epsilon, params.gamma
    iso = params.isolation_rate * np.exp(-lam * params.tau)
    rel = params.rho * (1 - params.alpha) * np.exp(-lam * params.kappa)
    da = params.delta * params.alpha
    J = np.zeros((6, 6), dtype=complex)
    J[0, 0] = -beta * i - mu
    J[0, 2] = -beta * s
    J[1, 0] = beta * i
    J[1, 1] = -mu - eps
    J[1, 2] = beta * s
    J[2, 1] = eps
    J[2, 2] = -gam - mu - iso
    J[3, 2] = iso
    J[3, 3] = -rel - da - mu
    J[4, 2] = gam
    J[4, 3] = rel
    J[4, 4] = -mu
    J[5, 3] = da
    J[5, 5] = -mu
    return J


def characteristic_determinant(lam: complex, params: ModelParams, beta: float,
                               equilibrium: str = "dfe") -> complex:
    """χ(λ) = det(λI − J(λ)) evaluated numerically."""
    eq = _check_equilibrium(equilibrium)
    state = disease_free_equilibrium() if eq == "dfe" else endemic_equilibrium(params, beta)
    if state is None:
        raise ParameterError("endemic equilibrium does not exist")
    J = delayed_jacobian(complex(lam), params, beta, state)
    return complex(np.linalg.det(complex(lam) * np.eye(6) - J))


def _newton(f, z, max_iter=100):
    value, deriv = f(z)
    for _ in range(max_iter):
        if deriv == 0 or not np.isfinite(value):
            return None
        dz = value / deriv
        lam = 1.0
        size = abs(value)
        for _ in range(30):
            trial = z - lam * dz
            tv, td = f(trial)
            if np.isfinite(tv) and abs(tv) < size:
                break
            lam *= 0.5
        else:
            return z if abs(value) < 1e-12 else None
        z, value, deriv = trial, tv, td
        if abs(lam * dz) <= 1e-14 * max(1.0, abs(z)):
            return z
    return z if abs(value) < 1e-10 else None


def _factor_roots(f, box, spacing):
    (re_lo, re_hi), (im_lo, im_hi) = box
    re = np.arange(re_lo, re_hi + 0.5 * spacing, spacing)
    im = np.arange(im_lo, im_hi + 0.5 * spacing, spacing)
    grid = re[None, :] + 1j * im[:, None]
    mag = np.abs(f(grid)[0])
    padded = np.pad(mag, 1, constant_values=np.inf)
    centre = padded[1:-1, 1:-1]
    is_min = np.ones_like(centre, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            shifted = padded[1 + di:padded.shape[0] - 1 + di, 1 + dj:padded.shape[1] - 1 + dj]
            is_min &= centre <= shifted
    roots = []
    margin = 1e-9
    for seed in grid[is_min]:
        z = _newton(lambda v: tuple(complex(a) for a in f(v)), complex(seed))
        if z is None:
            continue
        if not (re_lo - margin <= z.real <= re_hi + margin
                and im_lo - margin - 1e-12 <= abs(z.imag) <= im_hi + margin):
            continue
        z = complex(z.real, abs(z.imag))
        if all(abs(z - other) > 1e-8 * max(1.0, abs(z)) for other in roots):
            roots.append(z)
    return roots


DEFAULT_BOX = ((-2.0, 1.0), (0.0, 5.0))


def characteristic_roots(params: ModelParams, beta: float, equilibrium: str = "dfe",
                         box=DEFAULT_BOX, spacing: float = 0.05) -> list[complex]:
    """All roots of χ with Im ≥ 0 found in ``box`` (grid seeds + Newton)."""
    eq = _check_equilibrium(equilibrium)
    roots = []
    if box[0][0] <= -params.mu <= box[0][1] and box[1][0] <= 0.0:
        roots.append(complex(-params.mu, 0.0))
    roots += _factor_roots(lambda z: _quarantine_factor(z, params), box, spacing)
    roots += _factor_roots(lambda z: _delay_factor(z, params, beta, eq), box, spacing)
    return roots


def leading_root(params: ModelParams, beta: float, equilibrium: str = "dfe",
                 box=DEFAULT_BOX, spacing: float = 0.05) -> complex | None:
    """Rightmost characteristic root inside ``box`` or ``None``.

    Each factor of χ is searched separately: |factor| is sampled on a grid
    with the given spacing, local minima seed a damped Newton iteration that
    uses the analytic derivative.
    """
    roots = characteristic_roots(params, beta, equilibrium, box, spacing)
    if not roots:
        log.warning("no characteristic root found in box %s", box)
        return None
    return max(roots, key=lambda z: (z.real, z.imag))


def critical_delay_by_root_tracking(params: ModelParams, beta: float, tau_grid,
                                    box=((-0.5, 0.5), (0.0, 2.0)),
                                    spacing: float = 0.05) -> float | None:
    """First τ on ``tau_grid`` where the leading DFE root crosses Re λ = 0.

    The crossing is located by linear interpolation of the leading real part
    between the two bracketing grid points. Independent of
    :func:`critical_delay`.
    """
    previous = None
    for tau in tau_grid:
        z = leading_root(params.replace(tau=float(tau)), beta, "dfe", box, spacing)
        if z is None:
            previous = None
            continue
        if previous is not None and previous[1] < 0 <= z.real:
            t0, r0 = previous
            return t0 + (float(tau) - t0) * (-r0) / (z.real - r0)
        previous = (float(tau), z.real)
    return None


# ---------------------------------------------------------------------------
# classification


@dataclass
class StabilityReport:
    equilibrium: str
    r0: float
    state: State | None
    conditions: dict[str, bool] = field(default_factory=dict)
    coefficients: dict[str, float] = field(default_factory=dict)
    omega_star: float | None = None
    tau_star: float | None = None
    transversality: Transversality | None = None
    verdict: str = "inconclusive"
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["state"] = None if self.state is None else list(self.state)
        if self.transversality is not None:
            out["transversality"] = self.transversality._asdict()
        return out


def classify_dfe(params: ModelParams, beta: float) -> StabilityReport:
    """Stability of E₀ from the critical-delay criterion.

    Verdicts: ``unstable`` when the undelayed system is already unstable
    (R₀ > 1); ``inconclusive`` when the quarantine-branch or f₁ > 0
    hypotheses fail; ``stable_all_delays`` when d₂² > e₂²; otherwise
    ``stable_below_tau_star`` if a self-consistent τ* exists and the
    transversality quotients satisfy x + y > 0 and x + y > z.
    """
    mu = params.mu
    c = dfe_coefficients(params, beta)
    r0 = reproduction_number(params, beta)
    rep = StabilityReport("DFE", r0, disease_free_equilibrium(),
                          coefficients={k: float(v) for k, v in asdict(c).items()})
    quarantine_tau0 = mu + params.delta * params.alpha + params.rho * (1 - params.alpha)
    cond = rep.conditions
    cond["no_delay_stable"] = bool(c.d1 + c.e1 > 0 and c.d2 + c.e2 > 0 and mu > 0
                                   and quarantine_tau0 > 0)
    cond["d2_positive"] = bool(c.d2 > 0)
    cond["alpha_below_one"] = bool(params.alpha < 1)
    cond["quarantine_branch"] = quarantine_branch_stable(params)
    cond["f1_positive"] = bool(c.f1 > 0)
    cond["d2sq_gt_e2sq"] = bool(c.f2 > 0)

    if not cond["no_delay_stable"]:
        rep.verdict = "unstable"
        rep.notes.append("undelayed system unstable (d2 + e2 <= 0 means R0 >= 1)")
        return rep
    if cond["d2sq_gt_e2sq"] and cond["quarantine_branch"] and cond["f1_positive"]:
        rep.verdict = "stable_all_delays"
        return rep

    crit = critical_delay(params, beta)
    if crit.found:
        rep.omega_star, rep.tau_star = crit.omega_star, crit.tau_star
        tr = transversality(params, beta, crit.omega_star, crit.tau_star)
        rep.transversality = tr
        w2 = crit.omega_star ** 2
        c_star = dfe_coefficients(params, beta, crit.tau_star)
        cond["gamma_sq_gt_omega_sq"] = bool(params.gamma ** 2 > w2)
        cond["d2_lt_omega_sq"] = bool(c_star.d2 < w2)
        cond["x_gt_y"] = bool(tr.x > tr.y)
        cond["transversality"] = tr.holds
        rep.notes.append(f"configured tau = {params.tau:g} is "
                         f"{'below' if params.tau < crit.tau_star else 'above'} tau*")
    else:
        rep.notes.append(f"no self-consistent tau*: {crit.diagnostic}")

    if not (cond["quarantine_branch"] and cond["f1_positive"]):
        rep.verdict = "inconclusive"
        rep.notes.append("stability hypotheses (quarantine branch, f1 > 0) not met")
    elif crit.found and cond.get("transversality"):
        rep.verdict = "stable_below_tau_star"
    else:
        rep.verdict = "inconclusive"
    return rep


def classify_endemic(params: ModelParams, beta: float) -> StabilityReport | None:
    """Stability of E*; ``None`` when the endemic state does not exist."""
    eq = endemic_equilibrium(params, beta)
    if eq is None:
        return None
    c = endemic_coefficients(params, beta)
    rep = StabilityReport("endemic", reproduction_number(params, beta), eq,
                          coefficients={k: float(v) for k, v in asdict(c).items()})
    cond = rep.conditions
    cond["existence"] = True
    cond["alpha_below_one"] = bool(params.alpha < 1)
    cond["no_delay_routh"] = bool(c.a1 + c.b0 > 0 and c.a2 + c.b1 > 0 and c.a3 + c.b2 > 0)
    cond["quarantine_branch"] = quarantine_branch_stable(params)
    cond["c_all_positive"] = bool(c.c1 > 0 and c.c2 > 0 and c.c3 > 0)
    cond["c3_negative"] = bool(c.c3 < 0)
    cond["sextic_all_positive"] = bool(all(v > 0 for v in c.sextic()))
    if cond["quarantine_branch"] and cond["c_all_positive"]:
        rep.verdict = "stable_all_delays"
    elif cond["c3_negative"]:
        rep.verdict = "unstable"
    else:
        rep.verdict = "inconclusive"
    return rep
