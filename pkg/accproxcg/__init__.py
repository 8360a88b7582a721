"""
accproxcg - accelerated proximal stochastic conjugate-gradient methods.

This package provides functionality to:
1. Parse, normalize and sample LIBSVM-format sparse classification data
2. Evaluate four nonconvex margin losses with an l1 regularizer
3. Run Acc-Prox-CG-SARAH and its restart (RS) and switching (ST) variants
4. Run the ProxSARAH, Prox-SpiderBoost and ProxSVRG+ baselines
5. Compute the rate constants and feasibility conditions behind the methods
6. Drive reproducible experiments that emit per-epoch CSV metrics
"""

__version__ = "0.1.0"
