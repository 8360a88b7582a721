"""
Test package for accproxcg.
"""
