"""
Named experiment configurations for accproxcg.

Presets ``v1``..``v8`` configure Acc-Prox-CG-SARAH, ``RS-v1``..``RS-v8`` the restart
variant and ``ST-v1``..``ST-v8`` the switching variant; all share b, m, the beta formula
and gamma by row. Preset ``table3`` gives every algorithm its standard comparison
settings. Lambda rules ``paper:w8a``, ``paper:a9a`` and ``paper:gisette`` scale the l1
weight with the dataset size.
"""

import logging
import math
import re
from typing import Any, Dict, NamedTuple, Optional, Tuple, Union

from accproxcg.data_io.sampling import integer_cube_root
from accproxcg.errors import SpecError
from accproxcg.optimizers import BASELINES, OPTIMIZERS
from accproxcg.schemas import BetaFormula, BetaRule, OptimizerConfig

logger = logging.getLogger("accproxcg.presets")

_PRESET_PATTERN = re.compile(r"^(?:(RS|ST)-)?v([1-8])$")


class PresetRow(NamedTuple):
    batch_rule: str
    beta_rule: BetaRule
    gamma_divisor: float


TABLE2: Dict[int, PresetRow] = {
    1: PresetRow("cube_root", BetaRule.AFR, 4.0),
    2: PresetRow("cube_root", BetaRule.FRPR, 4.0),
    3: PresetRow("sqrt", BetaRule.AFR, 4.0),
    4: PresetRow("sqrt", BetaRule.AFR, 5.0),
    5: PresetRow("sqrt", BetaRule.FRPR, 4.0),
    6: PresetRow("sqrt", BetaRule.FRPR, 5.0),
    7: PresetRow("two_sqrt", BetaRule.AFR, 4.0),
    8: PresetRow("two_sqrt", BetaRule.FRPR, 4.0),
}

_VARIANT_ALGORITHM = {
    None: "acc_prox_cg_sarah",
    "RS": "acc_prox_cg_sarah_rs",
    "ST": "acc_prox_cg_sarah_st",
}


def is_known_preset(name: str) -> bool:
    """Whether a preset name exists, independent of the dataset."""
    return name == "table3" or bool(_PRESET_PATTERN.match(name))


def batch_size_for(rule: str, n: int) -> int:
    if rule == "cube_root":
        b = integer_cube_root(n)
    elif rule == "sqrt":
        b = math.isqrt(n)
    elif rule == "two_sqrt":
        b = math.isqrt(4 * n)
    else:
        raise SpecError(f"unknown batch rule {rule!r}")
    return max(1, min(n, b))


def epoch_length_for(n: int) -> int:
    """m = floor(n^(1/3) / 3), at least 1."""
    return max(1, integer_cube_root(n) // 3)


def clamped_gamma(m: int, divisor: float) -> float:
    """gamma = sqrt(m) / divisor, clamped to 1."""
    gamma = math.sqrt(m) / divisor
    if gamma > 1.0:
        logger.warning(f"gamma = sqrt({m})/{divisor:g} = {gamma:.4f} exceeds 1; using 1")
        return 1.0
    return gamma


def table2_settings(row: int, n: int) -> Dict[str, Any]:
    """b, m, beta formula and gamma of one Table-2 row for n examples."""
    try:
        spec = TABLE2[row]
    except KeyError:
        raise SpecError(f"unknown preset row {row}; rows are 1..8")
    m = epoch_length_for(n)
    return {
        "batch_size": batch_size_for(spec.batch_rule, n),
        "epoch_length": m,
        "beta_formula": BetaFormula(rule=spec.beta_rule),
        "gamma": clamped_gamma(m, spec.gamma_divisor),
    }


def preset_config(
    preset: str,
    n: int,
    L: float,
    algorithm: Optional[str] = None,
    **overrides: Any,
) -> Tuple[str, OptimizerConfig]:
    """Expand a preset name into an algorithm name and its configuration.

    Args:
        preset: ``v1``..``v8``, ``RS-v1``..``RS-v8``, ``ST-v1``..``ST-v8`` or ``table3``
        n: Number of examples
        L: Lipschitz constant of the loss
        algorithm: Algorithm the preset applies to; required for ``table3``
        **overrides: Explicit settings applied last

    Returns:
        Tuple[str, OptimizerConfig]: (algorithm name, config)

    Raises:
        SpecError: Unknown preset, or a preset that does not fit the algorithm
    """
    if preset == "table3":
        if algorithm is None:
            raise SpecError("preset 'table3' needs an algorithm")
        if algorithm in BASELINES:
            cls = OPTIMIZERS[algorithm]
            return algorithm, _build(cls.default_settings(n, L), overrides)
        if algorithm in ("acc_prox_cg_sarah", "acc_prox_cg_sarah_rs"):
            return algorithm, _build(table2_settings(1, n), overrides)
        raise SpecError(f"preset 'table3' has no row for {algorithm!r}")

    match = _PRESET_PATTERN.match(preset)
    if not match:
        raise SpecError(f"unknown preset {preset!r}")
    variant, row = match.group(1), int(match.group(2))
    preset_algorithm = _VARIANT_ALGORITHM[variant]
    if algorithm is not None and algorithm != preset_algorithm:
        raise SpecError(f"preset {preset!r} configures {preset_algorithm}, not {algorithm}")

    settings = table2_settings(row, n)
    if variant == "ST":
        m = settings["epoch_length"]
        if m < 3:
            raise SpecError(f"the switching variant needs m >= 3, got m={m} for n={n}")
        settings["switch_frequency"] = min(5, m - 1)
        settings["eta_fixed"] = 1.0 / L
    return preset_algorithm, _build(settings, overrides)


def _build(settings: Dict[str, Any], overrides: Dict[str, Any]) -> OptimizerConfig:
    merged = dict(settings)
    merged.update(overrides)
    try:
        return OptimizerConfig(**merged)
    except ValueError as e:
        raise SpecError(f"invalid optimizer settings: {e}") from e


def resolve_lambda(lam: Union[float, str], n: int, d: int) -> float:
    """Turn an explicit l1 weight or a dataset rule into a number.

    Rules: w8a 1e-2/n, a9a 1e-3/n, gisette 1e-7 * sqrt(n) / sqrt(d).
    """
    if not isinstance(lam, str):
        return float(lam)
    if lam == "paper:w8a":
        return 1e-2 / n
    if lam == "paper:a9a":
        return 1e-3 / n
    if lam == "paper:gisette":
        return 1e-7 * math.sqrt(n) / math.sqrt(d)
    raise SpecError(f"unknown lambda rule {lam!r}")
