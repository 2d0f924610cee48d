#!/usr/bin/env python3
"""Moment maps on tensor targets: the rank-one block formula, equivariance,
and the Hamiltonian pairing.

The target V is a tensor product of slots, one factor acting per slot.
Each unitary factor gets a skew-Hermitian moment-map block built from
rank-one outer products of the slices of the tensor; dual slots flip the
sign and transpose, endomorphism slots give a commutator.
"""
import numpy as np

from gpwb.groups import ProductGroupSpec, inner_product, random_compact, random_unitary
from gpwb.reps import (
    DUAL,
    STANDARD,
    RepSpec,
    Slot,
    act,
    infinitesimal_act,
    mu_full,
    symplectic_form,
)

rng = np.random.default_rng(0)

# A U(2) x U(3) action on Hom(C^3, C^2): factor 1 standard, factor 2 dual.
spec = ProductGroupSpec((2, 3))
rep = RepSpec(spec, (Slot(2, STANDARD, 0), Slot(3, DUAL, 1)))

T = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
m = mu_full(T.reshape(-1), rep)

print("moment map of a Hom-type element")
print("  block 1 = -i T T^+:")
print(np.round(m.blocks[0], 3))
print("  block 2 = +i T^+ T:")
print(np.round(m.blocks[1], 3))
print("  trace sum rule |tr mu1 + tr mu2| =",
      abs(np.trace(m.blocks[0]) + np.trace(m.blocks[1])))

# Equivariance: mu(k x) = Ad_k mu(x)
k = random_unitary(spec, rng)
lhs = mu_full(act(k, T.reshape(-1), rep), rep)
worst = max(
    np.linalg.norm(b - kb @ mb @ kb.conj().T)
    for b, kb, mb in zip(lhs.blocks, k.blocks, m.blocks)
)
print("equivariance defect:", worst)

# Hamiltonian property: d/de <mu(x + e v), s> = omega(s.x, v)
eps = 1e-5
x = T.reshape(-1)
v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
s = random_compact(spec, rng)
fd = (
    inner_product(mu_full(x + eps * v, rep), s, spec)
    - inner_product(mu_full(x - eps * v, rep), s, spec)
) / (2 * eps)
om = symplectic_form(infinitesimal_act(s, x, rep), v)
print(f"Hamiltonian pairing: finite difference {fd:.8f} vs symplectic {om:.8f}")
