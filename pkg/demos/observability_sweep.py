"""Observability of the harmonic heat semigroup from a periodic lattice.

Run with ``python3 demos/observability_sweep.py``.  First the spectral
constant ``C_N`` of the lattice grows roughly like ``exp(c sqrt(N))``.  Then
the observability cost ``C_T`` blows up as ``T -> 0`` and a fitted bound of
the form ``K exp(K / T^e)`` is placed above it.
"""
import numpy as np

from gsobs.geometry import RegionModel
from gsobs.observability import cost_vs_bound_sweep, spectral_constant_empirical, sqrt_envelope_fit

omega = RegionModel.periodic_1d(1.0, 0.0, 0.5)

Ns = np.arange(4, 41, 4)
C = [spectral_constant_empirical(omega, 1, int(N)).C_N for N in Ns]
env = sqrt_envelope_fit(Ns, np.log(C))
print("spectral constant of the lattice")
for N, c in zip(Ns, C):
    print(f"  N = {N:2d}  C_N = {c:10.4f}")
print(f"  envelope: log C_N <= {env.kappa:.3f} + {env.c:.3f} sqrt(N)")

res = cost_vs_bound_sweep(1, 1, 1.0, 1, 30, omega, np.linspace(0.1, 1.0, 10))
print(f"\nfitted r1 = {res.r1:.4f}, exponent = {res.exponent:.4f}, K = {res.K:.4f}")
print("      T        C_T   log bound   margin")
for row in res.rows:
    print(f"  {row.T:5.2f} {row.C_T:10.4g} {row.log_bound:10.4f} {row.margin:8.4f}")
