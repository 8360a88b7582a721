"""
Rate-constant calculators for accproxcg.

Pure functions evaluating the linear-rate constants of the conjugate SARAH methods,
the feasibility condition on (b, gamma), the suggested momentum weight, the
gradient-dominance rate and the convergence radii. The ``theory`` CLI command and the
experiment reports feed them with measured quantities; nothing here is asserted
against a run.

Notation: eta1/eta2 bound the realized steps, beta_hat bounds the estimator norm ratio,
alpha bounds Phi(c2), tau and sigma bound the estimator deviation, q is the number of
conjugate steps per epoch of the switching variant.
"""

import logging
import math
from typing import Any, Dict, NamedTuple, Optional, Sequence, Tuple

from accproxcg.errors import DomainError
from accproxcg.schemas import TheoryInputs

logger = logging.getLogger("accproxcg.theory")

FEASIBILITY_TOL = 1e-12


class Radii(NamedTuple):
    """Convergence radii: with deviation, restart variant, switching variant."""
    delta: float
    delta_bar: float
    delta_st: float


def _check_beta_hat(beta_hat: float) -> None:
    if not 0.0 < beta_hat < 1.0:
        raise DomainError(f"beta_hat must lie in (0, 1), got {beta_hat}")


def phi(x: float) -> float:
    """Phi(x) = (1 + x) / (1 - x) on [0, 1)."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"Phi is defined on [0, 1), got {x}")
    return (1.0 + x) / (1.0 - x)


def rate_constants(inp: TheoryInputs) -> Tuple[float, float]:
    """Linear rate xi and deviation constant C.

    Returns:
        Tuple[float, float]: (xi, C)
    """
    bh, a = inp.beta_hat, inp.alpha
    _check_beta_hat(bh)
    xi = (2.0 + 4.0 * inp.eta2 ** 2) * a * bh ** 2 / (
        (inp.m + 1) * inp.eta1 ** 2 * (1.0 - bh) ** 2 * (1.0 + bh)
    )
    c = ((1.0 - bh) * inp.tau / a + (1.0 - bh) ** 2 * (1.0 + bh) / (2.0 * a * bh ** 2)) * (
        inp.sigma ** 2
    )
    return xi, c


def rate_constants_c2_small(inp: TheoryInputs) -> Tuple[float, float]:
    """(xi2, C2), the constants for c2 small enough that alpha = 2."""
    bh = inp.beta_hat
    _check_beta_hat(bh)
    xi2 = (2.0 + 4.0 * inp.eta2 ** 2) * bh ** 2 / ((inp.m + 1) * inp.eta1 ** 2 * (1.0 - bh) ** 2)
    c2 = ((1.0 - bh) * inp.tau / (1.0 + bh) + (1.0 - bh) ** 2 / (2.0 * bh ** 2)) * inp.sigma ** 2
    return xi2, c2


def st_rate_constants(inp: TheoryInputs) -> Tuple[float, float]:
    """(xi_st, C_st) of the switching variant.

    Raises:
        DomainError: If q is missing or below 1
    """
    bh, a, q = inp.beta_hat, inp.alpha, inp.q
    _check_beta_hat(bh)
    if q is None or q < 1:
        raise DomainError(f"the switching constants need q >= 1, got q={q}")
    xi, _ = rate_constants(inp)
    shrink = 1.0 - bh ** q
    c_st = (
        (1.0 - bh) * (1.0 + bh ** q) * inp.tau / a
        + (1.0 - bh) ** 2 * (1.0 + bh) / (2.0 * a * bh ** 2 * shrink)
    ) * inp.sigma ** 2
    return xi * shrink, c_st


def _feasibility_gap(
    b: int, gamma: float, m: int, eta2: float, L: float, n: int, q: Optional[int]
) -> Tuple[float, float]:
    if n <= 1 or not 1 <= b <= n:
        raise DomainError(f"need n > 1 and 1 <= b <= n, got b={b}, n={n}")
    M = m if q is None else m + q - 1
    variance = (2.0 + 4.0 * eta2 ** 2) * (n - b) / (b * (n - 1)) * (L * gamma) ** 2 * M
    slack = 2.0 / eta2 - L * gamma - 3.0
    return variance - slack, max(1.0, abs(variance), abs(slack))


def check_feasibility(
    b: int, gamma: float, m: int, eta2: float, L: float, n: int, q: Optional[int] = None
) -> bool:
    """Whether (b, gamma) satisfy the condition the linear rates rely on.

    Uses M = m for the conjugate methods and M = m + q - 1 for the switching variant.
    """
    gap, scale = _feasibility_gap(b, gamma, m, eta2, L, n, q)
    return gap <= FEASIBILITY_TOL * scale


def suggested_gamma(m: int, eta2: float, L: float, n: int, b: int) -> Optional[float]:
    """Largest gamma meeting the feasibility condition at (m, b).

    Returns:
        Optional[float]: The suggestion, or None when the discriminant is negative

    Raises:
        DomainError: If eta2 > 2/3
    """
    if eta2 > 2.0 / 3.0:
        raise DomainError(f"a gamma suggestion needs eta2 <= 2/3, got {eta2}")
    if n <= 1 or not 1 <= b <= n:
        raise DomainError(f"need n > 1 and 1 <= b <= n, got b={b}, n={n}")

    first = (2.0 - 3.0 * eta2) / (eta2 * L)
    if first == 0.0:
        logger.warning("eta2 = 2/3 leaves no room for momentum; suggestion is 0")
    varpi = (1.0 + 2.0 * eta2 ** 2) * (n - b) / (eta2 * b * (n - 1))
    if varpi == 0.0:
        return first

    disc = 1.0 - 24.0 * m * eta2 * varpi + 16.0 * m * varpi
    if disc < 0.0:
        return None
    second = (-1.0 + math.sqrt(disc)) / (4.0 * L * eta2 * m * varpi)
    return min(first, second)


def gd_rate(tau_o: float, m: int, eta1: float, gamma: float) -> float:
    """Rate xi' = tau_o / ((m + 1) * eta1^2 * gamma) under gradient dominance."""
    if tau_o <= 0 or m < 1 or eta1 <= 0 or gamma <= 0:
        raise DomainError("gd_rate needs tau_o, m, eta1 and gamma all positive")
    return tau_o / ((m + 1) * eta1 ** 2 * gamma)


def radii(
    xi: float,
    delta: float,
    c: float,
    xi_st: Optional[float] = None,
    delta_st: Optional[float] = None,
) -> Radii:
    """Radii of the balls the gradient-mapping norms converge to.

    Args:
        xi: Rate of the conjugate methods, < 1
        delta: Scaled initial sub-optimality
        c: Deviation constant
        xi_st: Rate of the switching variant; defaults to xi
        delta_st: Scaled sub-optimality of the switching variant; defaults to delta

    Raises:
        DomainError: If a rate is >= 1
    """
    xi_st = xi if xi_st is None else xi_st
    delta_st = delta if delta_st is None else delta_st
    if xi >= 1.0 or xi_st >= 1.0:
        raise DomainError(f"radii need rates below 1, got xi={xi}, xi_st={xi_st}")
    return Radii(
        delta=xi * (delta + c) / (1.0 - xi),
        delta_bar=xi * delta / (1.0 - xi),
        delta_st=xi_st * (delta_st + c) / (1.0 - xi_st),
    )


def empirical_delta(
    objectives: Sequence[float], p_star: float, inp: TheoryInputs
) -> Tuple[float, Optional[float]]:
    """Scaled worst sub-optimality over the recorded epoch outputs.

    ``p_star`` is the best objective observed, so the values are post-hoc estimates.

    Returns:
        Tuple[float, Optional[float]]: (delta, delta_st); delta_st is None without q
    """
    if not objectives:
        raise DomainError("need at least one objective value")
    bh = inp.beta_hat
    _check_beta_hat(bh)
    scale = (1.0 - bh) ** 2 * (1.0 + bh) / (
        inp.gamma * inp.alpha * (1.0 + 2.0 * inp.eta2 ** 2) * bh ** 2
    )
    worst = max(0.0, max(p - p_star for p in objectives))
    delta = scale * worst
    delta_st = None if not inp.q else delta / (1.0 - bh ** inp.q)
    return delta, delta_st


def theory_report(inp: TheoryInputs, delta: float = 0.0) -> Dict[str, Any]:
    """Every calculator evaluated on one set of inputs.

    Quantities undefined for the inputs (no q, no tau_o, rate >= 1) are None.
    """
    xi, c = rate_constants(inp)
    xi2, c2 = rate_constants_c2_small(inp)
    report: Dict[str, Any] = {
        "xi": xi,
        "C": c,
        "xi2": xi2,
        "C2": c2,
        "xi_st": None,
        "C_st": None,
        "xi_gd": None,
        "feasible": check_feasibility(inp.b, inp.gamma, inp.m, inp.eta2, inp.L, inp.n)
        if inp.n > 1 and inp.b <= inp.n
        else None,
        "feasible_st": None,
        "suggested_gamma": None,
        "radii": None,
    }
    if inp.q:
        report["xi_st"], report["C_st"] = st_rate_constants(inp)
        if report["feasible"] is not None:
            report["feasible_st"] = check_feasibility(
                inp.b, inp.gamma, inp.m, inp.eta2, inp.L, inp.n, inp.q
            )
    if inp.tau_o is not None:
        report["xi_gd"] = gd_rate(inp.tau_o, inp.m, inp.eta1, inp.gamma)
    if inp.eta2 <= 2.0 / 3.0 and inp.n > 1 and inp.b <= inp.n:
        report["suggested_gamma"] = suggested_gamma(inp.m, inp.eta2, inp.L, inp.n, inp.b)
    xi_st = report["xi_st"]
    if xi < 1.0 and (xi_st is None or xi_st < 1.0):
        report["radii"] = radii(xi, delta, c, xi_st=xi_st)._asdict()
    return report
