"""
Optimizers for accproxcg.

This package holds the accelerated conjugate-gradient optimizers, the fixed-step
baselines, and a registry mapping algorithm names to classes.
"""

from typing import Dict, Optional, Type, Union

import numpy as np

from accproxcg.data_io.libsvm_parser import SparseDataset
from accproxcg.errors import SpecError
from accproxcg.losses import LossKind, MarginLossProblem
from accproxcg.optimizers.acc_prox_cg_sarah import (
    AccProxCGSarah,
    AccProxCGSarahRS,
    AccProxCGSarahST,
)
from accproxcg.optimizers.base import BaseOptimizer, BatchLine, RunStats
from accproxcg.optimizers.baselines import ProxSARAH, ProxSpiderBoost, ProxSVRGPlus
from accproxcg.schemas import OptimizerConfig, RunTrace

OPTIMIZERS: Dict[str, Type[BaseOptimizer]] = {
    cls.name: cls
    for cls in (
        AccProxCGSarah,
        AccProxCGSarahRS,
        AccProxCGSarahST,
        ProxSARAH,
        ProxSpiderBoost,
        ProxSVRGPlus,
    )
}

CG_METHODS = (AccProxCGSarah.name, AccProxCGSarahRS.name, AccProxCGSarahST.name)

BASELINES = (ProxSARAH.name, ProxSpiderBoost.name, ProxSVRGPlus.name)


def get_optimizer(name: str, config: OptimizerConfig) -> BaseOptimizer:
    """Instantiate an optimizer by registry name.

    Raises:
        SpecError: If the name is unknown
    """
    try:
        cls = OPTIMIZERS[name]
    except KeyError:
        raise SpecError(f"unknown algorithm {name!r}; known: {', '.join(sorted(OPTIMIZERS))}")
    return cls(config)


def _run(
    name: str,
    cfg: OptimizerConfig,
    ds: SparseDataset,
    kind: Union[LossKind, str],
    lam: float,
    w0: Optional[np.ndarray],
) -> RunTrace:
    return get_optimizer(name, cfg).run(MarginLossProblem(ds, kind, lam), w0)


def run_acc_prox_cg_sarah(cfg, ds, kind, lam, w0=None) -> RunTrace:
    """Run Acc-Prox-CG-SARAH on a classification problem."""
    return _run(AccProxCGSarah.name, cfg, ds, kind, lam, w0)


def run_acc_prox_cg_sarah_rs(cfg, ds, kind, lam, w0=None) -> RunTrace:
    """Run Acc-Prox-CG-SARAH-RS on a classification problem."""
    return _run(AccProxCGSarahRS.name, cfg, ds, kind, lam, w0)


def run_acc_prox_cg_sarah_st(cfg, ds, kind, lam, w0=None) -> RunTrace:
    """Run Acc-Prox-CG-SARAH-ST on a classification problem."""
    return _run(AccProxCGSarahST.name, cfg, ds, kind, lam, w0)


def run_prox_sarah(cfg, ds, kind, lam, w0=None) -> RunTrace:
    return _run(ProxSARAH.name, cfg, ds, kind, lam, w0)


def run_prox_spiderboost(cfg, ds, kind, lam, w0=None) -> RunTrace:
    return _run(ProxSpiderBoost.name, cfg, ds, kind, lam, w0)


def run_prox_svrg_plus(cfg, ds, kind, lam, w0=None) -> RunTrace:
    return _run(ProxSVRGPlus.name, cfg, ds, kind, lam, w0)


__all__ = [
    "OPTIMIZERS",
    "CG_METHODS",
    "BASELINES",
    "BaseOptimizer",
    "BatchLine",
    "RunStats",
    "AccProxCGSarah",
    "AccProxCGSarahRS",
    "AccProxCGSarahST",
    "ProxSARAH",
    "ProxSpiderBoost",
    "ProxSVRGPlus",
    "get_optimizer",
    "run_acc_prox_cg_sarah",
    "run_acc_prox_cg_sarah_rs",
    "run_acc_prox_cg_sarah_st",
    "run_prox_sarah",
    "run_prox_spiderboost",
    "run_prox_svrg_plus",
]
