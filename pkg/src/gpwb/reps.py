"""Tensor representations of product unitary groups and their moment maps.

The target space V is a tensor product of slots; each slot carries one
factor action: the standard representation, its dual (C acts by (C^-1)^t),
conjugation on endomorphisms, or nothing.  Moment maps come out of the
rank-one formula mu(x) = -i x x^dagger summed over slices, with the sign
and transpose flip on dual slots and the commutator form on adjoint slots.

The Hermitian pairing on V carries a factor 2 relative to the plain
coordinate inner product; with that normalisation the rank-one moment map
above is exactly the Hamiltonian generator of the unitary flow for the
symplectic form (<a,b> - <b,a>)/(2i).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import (
    AlgebraElement,
    DimensionMismatchError,
    GroupElement,
    ProductGroupSpec,
    SubgroupSetting,
    project_subalgebra,
)

STANDARD = "standard"
DUAL = "dual"
ADJOINT = "adjoint"
TRIVIAL = "trivial"


@dataclass(frozen=True)
class Slot:
    dim: int
    action: str
    factor: int = -1  # ignored for trivial slots


@dataclass(frozen=True)
class RepSpec:
    """Slot-to-factor assignment describing the action of the product group
    on V = slot_1 (x) ... (x) slot_k."""

    spec: ProductGroupSpec
    slots: tuple

    def __post_init__(self):
        slots = tuple(self.slots)
        for sl in slots:
            if sl.action not in (STANDARD, DUAL, ADJOINT, TRIVIAL):
                raise ValueError(f"unknown slot action {sl.action!r}")
            if sl.action != TRIVIAL:
                n = self.spec.factor_dims[sl.factor]
                want = n * n if sl.action == ADJOINT else n
                if sl.dim != want:
                    raise DimensionMismatchError(sl.factor, want, sl.dim)
        object.__setattr__(self, "slots", slots)

    @property
    def shape(self):
        return tuple(sl.dim for sl in self.slots)

    @property
    def dim(self):
        return int(np.prod(self.shape))

    def factor_slots(self, i):
        return [k for k, sl in enumerate(self.slots) if sl.action != TRIVIAL and sl.factor == i]


# ---------------------------------------------------------------------------
# representation helpers


def _slot_matrix(g: GroupElement, sl: Slot):
    if sl.action == TRIVIAL:
        return None
    A = g.blocks[sl.factor]
    if sl.action == STANDARD:
        return A
    if sl.action == DUAL:
        return np.linalg.inv(A).T
    # adjoint: B -> A B A^-1, row-major vec(ABC) = (A kron C^T) vec(B)
    Ainv = np.linalg.inv(A)
    return np.kron(A, Ainv.T)


def _slot_generator(s: AlgebraElement, sl: Slot):
    if sl.action == TRIVIAL:
        return None
    a = s.blocks[sl.factor]
    if sl.action == STANDARD:
        return a
    if sl.action == DUAL:
        return -a.T
    n = a.shape[0]
    eye = np.eye(n)
    return np.kron(a, eye) - np.kron(eye, a.T)


def _apply_slotwise(mats, x, rep: RepSpec):
    """Apply one matrix per slot to the flattened vector x."""
    t = np.asarray(x, dtype=complex).reshape(rep.shape)
    for axis, m in enumerate(mats):
        if m is None:
            continue
        t = np.tensordot(m, t, axes=(1, axis))
        t = np.moveaxis(t, 0, axis)
    return t.reshape(-1)


def act(g: GroupElement, x, rep: RepSpec):
    """Group action of g on a vector of V."""
    x = np.asarray(x, dtype=complex)
    if x.size != rep.dim:
        raise DimensionMismatchError("V", rep.dim, x.size)
    return _apply_slotwise([_slot_matrix(g, sl) for sl in rep.slots], x, rep)


def infinitesimal_act(s: AlgebraElement, x, rep: RepSpec):
    """d/dt act(exp(ts), x) at t = 0; linear in s and x."""
    x = np.asarray(x, dtype=complex)
    if x.size != rep.dim:
        raise DimensionMismatchError("V", rep.dim, x.size)
    out = np.zeros(rep.dim, dtype=complex)
    for axis, sl in enumerate(rep.slots):
        m = _slot_generator(s, sl)
        if m is None:
            continue
        mats = [m if k == axis else None for k in range(len(rep.slots))]
        out += _apply_slotwise(mats, x, rep)
    return out


def action_matrix(s: AlgebraElement, rep: RepSpec):
    """Matrix of infinitesimal_act(s, .) on flattened V."""
    n = rep.dim
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    for k in range(n):
        out[:, k] = infinitesimal_act(s, eye[:, k], rep)
    return out


# ---------------------------------------------------------------------------
# moment maps


def mu_fundamental(x):
    """Rank-one moment map -i x x^dagger of a single standard slot."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    return -1j * np.outer(x, x.conj())


def _slice_gram(x, rep: RepSpec, axis):
    """E_{jk} = sum over the other indices of X[..j..] conj(X[..k..])."""
    t = np.asarray(x, dtype=complex).reshape(rep.shape)
    t = np.moveaxis(t, axis, 0)
    flat = t.reshape(t.shape[0], -1)
    return flat @ flat.conj().T


def mu_factor(x, rep: RepSpec, factor_i: int):
    """Moment-map block of one factor, summed over the slots it acts on."""
    slots = rep.factor_slots(factor_i)
    if not slots:
        raise ValueError(f"factor {factor_i} acts trivially on V")
    n = rep.spec.factor_dims[factor_i]
    out = np.zeros((n, n), dtype=complex)
    for axis in slots:
        sl = rep.slots[axis]
        if sl.action == STANDARD:
            out += -1j * _slice_gram(x, rep, axis)
        elif sl.action == DUAL:
            out += 1j * _slice_gram(x, rep, axis).conj()
        elif sl.action == ADJOINT:
            t = np.asarray(x, dtype=complex).reshape(rep.shape)
            t = np.moveaxis(t, axis, 0)
            B = t.reshape(n, n, -1)
            for k in range(B.shape[2]):
                b = B[:, :, k]
                out += -1j * (b @ b.conj().T - b.conj().T @ b)
    return out


def mu_full(x, rep: RepSpec, spec: ProductGroupSpec = None) -> AlgebraElement:
    """Tuple of factor moment maps; zero blocks on factors acting trivially."""
    spec = spec or rep.spec
    blocks = []
    for i, n in enumerate(spec.factor_dims):
        if rep.factor_slots(i):
            blocks.append(mu_factor(x, rep, i))
        else:
            blocks.append(np.zeros((n, n), complex))
    return AlgebraElement(tuple(blocks), "compact")


def mu_shifted(x, rep: RepSpec, spec: ProductGroupSpec, setting: SubgroupSetting) -> AlgebraElement:
    """Subgroup moment map pi_h(mu(x)) - c_h."""
    return project_subalgebra(mu_full(x, rep, spec), setting) - setting.central_shift


# ---------------------------------------------------------------------------
# Kaehler structure on V


def pairing_v(a, b):
    """Hermitian pairing on V (conjugate-linear in the first argument),
    normalised with the factor 2 that makes mu_fundamental Hamiltonian."""
    return 2.0 * np.vdot(a, b)


def symplectic_form(a, b) -> float:
    """omega(a, b) = (<a,b> - <b,a>) / (2i) for the pairing above."""
    return float(2.0 * np.imag(np.vdot(a, b)))
