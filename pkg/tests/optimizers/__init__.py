"""
Test package for accproxcg optimizers.
"""
