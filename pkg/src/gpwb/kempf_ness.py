"""Finite-dimensional stability/flow correspondence (base = point).

Maximal weights of one-parameter subgroups, weighted filtrations and their
two-eigenvalue generators, the algebraic stability test, the integral of
the moment map along metric geodesics, and the descent flow onto the
shifted moment-map level set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm

from .groups import (
    FROZEN,
    AlgebraElement,
    GroupElement,
    ProductGroupSpec,
    SubgroupSetting,
    exp_hermitian_direction,
    inner_product,
    project_subalgebra,
)
from .reps import RepSpec, act, action_matrix, infinitesimal_act, mu_full, mu_shifted

MEMBERSHIP_TOL = 1e-10  # component mass outside V^- that still counts as inside


@dataclass(frozen=True)
class WeightedFiltration:
    """Increasing chain of subspaces of one factor with increasing weights.

    ``chain[k]`` is an orthonormal column basis of the k-th subspace; the
    last entry spans the whole factor space.  The associated algebra
    element has eigenvalue -i*alpha_k on the k-th graded piece, i.e.
    i*chi has the increasing real eigenvalues alpha_1 < ... < alpha_r.
    """

    factor: int
    chain: tuple
    weights: tuple

    def __post_init__(self):
        chain = tuple(np.asarray(q, dtype=complex) for q in self.chain)
        weights = tuple(float(a) for a in self.weights)
        if len(chain) != len(weights):
            raise ValueError("one weight per chain step required")
        if any(b >= a for a, b in zip(weights[1:], weights)):
            raise ValueError(f"weights must be strictly increasing, got {weights}")
        dims = [q.shape[1] for q in chain]
        if any(b >= a for a, b in zip(dims[1:], dims)):
            raise ValueError("chain must be strictly increasing")
        n = chain[-1].shape[0]
        if chain[-1].shape[1] != n:
            raise ValueError("last chain entry must span the full space")
        object.__setattr__(self, "chain", chain)
        object.__setattr__(self, "weights", weights)

    @property
    def length(self):
        return len(self.chain)

    def graded_projectors(self):
        prev = None
        out = []
        for q in self.chain:
            p = q @ q.conj().T
            out.append(p - prev if prev is not None else p)
            prev = q @ q.conj().T
        return out

    def element(self, spec: ProductGroupSpec) -> AlgebraElement:
        """chi = -i sum_k alpha_k P_k on the designated factor, 0 elsewhere."""
        blocks = [np.zeros((n, n), complex) for n in spec.factor_dims]
        acc = np.zeros_like(blocks[self.factor])
        for a, p in zip(self.weights, self.graded_projectors()):
            acc += -1j * a * p
        blocks[self.factor] = 0.5 * (acc - acc.conj().T)  # strip roundoff
        return AlgebraElement(tuple(blocks), "compact")


@dataclass
class StabilityVerdict:
    stable: bool
    slack: float
    witness: WeightedFiltration = None
    witness_weight: float = None
    marginal: bool = False

    def __post_init__(self):
        assert self.stable == (self.slack > 0.0)


@dataclass
class FlowResult:
    converged: bool
    iterations: int
    final_residual: float
    trajectory: list
    final_group_element: GroupElement
    sup_log_metric: float
    rejections: list = field(default_factory=list)
    diverged_reason: str = ""


# ---------------------------------------------------------------------------
# maximal weights


def negative_subspace(s: AlgebraElement, rep: RepSpec, tol=1e-9):
    """Orthonormal basis of the span of eigenvectors of i*rho(s) with
    eigenvalue <= 0 (within tol)."""
    H = 1j * action_matrix(s, rep)
    H = 0.5 * (H + H.conj().T)
    vals, vecs = np.linalg.eigh(H)
    keep = vals <= tol
    return vecs[:, keep]


def maximal_weight(x, s: AlgebraElement, rep: RepSpec) -> float:
    """0 if x lies in the non-positive eigenspace of i*rho(s), else +inf."""
    x = np.asarray(x, dtype=complex)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return 0.0
    basis = negative_subspace(s, rep)
    inside = basis @ (basis.conj().T @ x)
    if np.linalg.norm(x - inside) <= MEMBERSHIP_TOL * nx:
        return 0.0
    return np.inf


def total_weight(x, filt: WeightedFiltration, c: AlgebraElement, rep: RepSpec,
                 degrees=None) -> float:
    """deg(chi) + lambda(x; chi) - <chi, c>.

    ``degrees``: optional per-step degree data (deg W^1, ..., deg W^r); the
    degree of chi is alpha_r*deg(W^r) + sum_{k<r}(alpha_k - alpha_{k+1})*deg(W^k).
    Defaults to zero (base = point).
    """
    spec = rep.spec
    chi = filt.element(spec)
    alphas = filt.weights
    r = filt.length
    deg = 0.0
    if degrees is not None:
        if len(degrees) != r:
            raise ValueError("one degree per chain step required")
        deg = alphas[-1] * degrees[-1]
        for k in range(r - 1):
            deg += (alphas[k] - alphas[k + 1]) * degrees[k]
    lam = maximal_weight(x, chi, rep)
    if np.isinf(lam):
        return np.inf
    return deg + lam - inner_product(chi, c, spec)


# ---------------------------------------------------------------------------
# SSC generators


def ssc_generators(filt_chain, p_phi: int, factor=0):
    """Two-eigenvalue generators of the admissible weight cone of a chain.

    ``filt_chain`` is the increasing list of orthonormal bases; r = len.
    Returns the filtrations with weights (-1, 0) on each truncation
    (f-type, for every step) and weights (0, 1) on each co-truncation with
    index above p_phi (g-type), eigenvalues of the elements in {0, +-i}.
    """
    r = len(filt_chain)
    if not 0 <= p_phi <= r:
        raise ValueError(f"p index {p_phi} out of range for chain of length {r}")
    full = filt_chain[-1]
    gens = []
    for i in range(r):
        if i == r - 1:
            # full-space truncation: single weight -1
            gens.append(WeightedFiltration(factor, (full,), (-1.0,)))
        else:
            gens.append(WeightedFiltration(factor, (filt_chain[i], full), (-1.0, 0.0)))
    for j in range(p_phi, r):
        if j == 0:
            gens.append(WeightedFiltration(factor, (full,), (1.0,)))
        else:
            gens.append(WeightedFiltration(factor, (filt_chain[j - 1], full), (0.0, 1.0)))
    return gens


def membership_index(x, filt_chain, rep: RepSpec, factor=0):
    """Smallest i with x inside (chain_i (x) rest of V); 0-sentinel for x = 0."""
    x = np.asarray(x, dtype=complex)
    if np.linalg.norm(x) == 0.0:
        return 0
    t = x.reshape(rep.shape)
    axes = rep.factor_slots(factor)
    if len(axes) != 1 or rep.slots[axes[0]].action != "standard":
        raise ValueError("membership index needs a single standard slot for the factor")
    axis = axes[0]
    for i, q in enumerate(filt_chain):
        proj = np.tensordot(q @ q.conj().T, np.moveaxis(t, axis, 0), axes=(1, 0))
        rest = np.moveaxis(t, axis, 0) - proj
        if np.linalg.norm(rest) <= MEMBERSHIP_TOL * np.linalg.norm(x):
            return i + 1
    return len(filt_chain)


def _nested_chains(subspaces, dim_full):
    """All strictly increasing chains of the supplied subspaces, each chain
    closed off with the full space."""
    full = np.eye(dim_full, dtype=complex)
    items = []
    seen_proj = []
    for q in subspaces:
        q = np.asarray(q, dtype=complex)
        if q.ndim != 2 or q.shape[1] == 0 or q.shape[1] >= dim_full:
            continue
        p = q @ q.conj().T
        if any(np.linalg.norm(p - p0) < 1e-10 for p0 in seen_proj):
            continue
        seen_proj.append(p)
        items.append(q)
    items.sort(key=lambda q: q.shape[1])

    def contains(big, small):
        proj = big @ (big.conj().T @ small)
        return np.linalg.norm(proj - small) < 1e-10

    out = []

    def grow(prefix, start):
        out.append(prefix + [full])
        for k in range(start, len(items)):
            if not prefix or (
                items[k].shape[1] > prefix[-1].shape[1] and contains(items[k], prefix[-1])
            ):
                grow(prefix + [items[k]], k + 1)

    grow([], 0)
    return out


def default_subspace_lattice(x, rep: RepSpec, factor=0, include_coordinates=True):
    """Invariant-subspace candidates on one factor for desk-scale fixtures:
    coordinate subspaces plus the column space of x along the factor slot."""
    n = rep.spec.factor_dims[factor]
    t = np.asarray(x, dtype=complex).reshape(rep.shape)
    axes = rep.factor_slots(factor)
    axis = axes[0]
    mat = np.moveaxis(t, axis, 0).reshape(n, -1)
    subspaces = []
    if include_coordinates:
        eye = np.eye(n, dtype=complex)
        for k in range(1, n):
            subspaces.append(eye[:, :k])
    u, sv, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * (sv[0] if sv.size and sv[0] > 0 else 1.0)))
    if 0 < rank < n:
        subspaces.append(u[:, :rank])
    return subspaces


def stability_test(x, rep: RepSpec, spec: ProductGroupSpec, setting: SubgroupSetting,
                   degrees=None, subspace_lattice=None, factor=None) -> StabilityVerdict:
    """Algebraic stability of x for the subgroup action.

    Enumerates chains over the supplied invariant-subspace lattice on the
    designated unfrozen factor, reduces each chain to its two-eigenvalue
    generators, evaluates the total weight of every generator, and returns
    the minimal-slack verdict.  Degree data is injected per chain step by
    a callable ``degrees(chain)`` when the fixture carries curve degrees;
    by default all degrees are zero.
    """
    if factor is None:
        nf = [i for i, m in enumerate(setting.modes) if m != FROZEN]
        factor = nf[0]
    n = spec.factor_dims[factor]
    if subspace_lattice is None:
        subspace_lattice = default_subspace_lattice(x, rep, factor)
    c = setting.central_shift
    best = np.inf
    witness = None
    for chain in _nested_chains(subspace_lattice, n):
        p_phi = membership_index(x, chain, rep, factor)
        for gen in ssc_generators(chain, p_phi, factor):
            deg = None
            if degrees is not None:
                deg = degrees(gen.chain)
            w = total_weight(x, gen, c, rep, degrees=deg)
            if w < best:
                best = w
                witness = gen
    stable = bool(best > 0.0)
    marginal = bool(abs(best) <= 1e-9) if np.isfinite(best) else False
    return StabilityVerdict(stable=stable, slack=float(best), witness=witness,
                            witness_weight=float(best), marginal=marginal)


# ---------------------------------------------------------------------------
# simplicity


def compact_stabilizer_dimension(x, rep: RepSpec, setting: SubgroupSetting, tol=1e-8):
    """Dimension of {s in h (compact) : rho(s) x = 0}.

    A nonzero solution is a semisimple infinitesimal stabilizer, so the
    configuration is not simple.  Works over the real span of a
    skew-Hermitian basis of the unfrozen blocks.
    """
    spec = rep.spec
    basis = []
    for f in setting.unfrozen():
        n = spec.factor_dims[f]
        for i in range(n):
            e = [np.zeros((m, m), complex) for m in spec.factor_dims]
            e[f][i, i] = 1j
            basis.append(AlgebraElement(tuple(e), "compact"))
        for i in range(n):
            for j in range(i + 1, n):
                e = [np.zeros((m, m), complex) for m in spec.factor_dims]
                e[f][i, j] = 1.0
                e[f][j, i] = -1.0
                basis.append(AlgebraElement(tuple(e), "compact"))
                e2 = [np.zeros((m, m), complex) for m in spec.factor_dims]
                e2[f][i, j] = 1j
                e2[f][j, i] = 1j
                basis.append(AlgebraElement(tuple(e2), "compact"))
    cols = [infinitesimal_act(s, x, rep) for s in basis]
    A = np.stack([np.concatenate([c.real, c.imag]) for c in cols], axis=1)
    sv = np.linalg.svd(A, compute_uv=False)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    return int(np.sum(sv <= tol * scale)) + (len(basis) - len(sv) if A.shape[0] < len(basis) else 0)


def is_simple(x, rep: RepSpec, setting: SubgroupSetting) -> bool:
    """No semisimple element of the subalgebra fixes x infinitesimally."""
    return compact_stabilizer_dimension(x, rep, setting) == 0


# ---------------------------------------------------------------------------
# integral of the moment map


def kn_functional(x, s: AlgebraElement, rep: RepSpec, spec: ProductGroupSpec,
                  setting: SubgroupSetting, quadrature_steps: int = 512) -> float:
    """Integral over t in [0,1] of <mu_h(e^{i t s} x) - c_h, s>.

    Composite Simpson quadrature with at least ``quadrature_steps`` panels.
    """
    m = max(int(quadrature_steps), 2)
    if m % 2:
        m += 1
    ts = np.linspace(0.0, 1.0, m + 1)
    c = setting.central_shift
    vals = np.empty(m + 1)
    for k, t in enumerate(ts):
        y = act(exp_hermitian_direction(s, t), x, rep)
        mh = project_subalgebra(mu_full(y, rep, spec), setting) - c
        vals[k] = inner_product(mh, s, spec)
    h = 1.0 / m
    return float(h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum()))


def metric_exponent(g: GroupElement, setting: SubgroupSetting) -> AlgebraElement:
    """The compact-flavor w with g = k e^{i w}: i*w = (1/2) log(g^dagger g)."""
    blocks = []
    for i, b in enumerate(g.blocks):
        if setting.modes[i] == FROZEN:
            blocks.append(np.zeros_like(b))
            continue
        m = b.conj().T @ b
        w = -0.5j * logm(m)
        blocks.append(0.5 * (w - w.conj().T))
    return AlgebraElement(tuple(blocks), "compact")


def kn_functional_group(x, g: GroupElement, rep: RepSpec, spec: ProductGroupSpec,
                        setting: SubgroupSetting, quadrature_steps: int = 512) -> float:
    """Integral of the moment map at a general subgroup element, via the
    polar decomposition g = k e^{i w} (left-unitary part dropped)."""
    w = metric_exponent(g, setting)
    return kn_functional(x, w, rep, spec, setting, quadrature_steps)


# ---------------------------------------------------------------------------
# descent flow


def gradient_flow(x, rep: RepSpec, spec: ProductGroupSpec, setting: SubgroupSetting,
                  max_iter=5000, step=0.1, tol=1e-9, h0: GroupElement = None,
                  step_cap=1.0, metric_cutoff=50.0) -> FlowResult:
    """Descent on the integral of the moment map.

    Each accepted step multiplies the accumulated element by
    exp(-i*step*residual); the step halves on residual increase and doubles
    after five straight accepts, capped at ``step_cap``.
    """
    h = h0 if h0 is not None else GroupElement.identity(spec, "complexified")

    def residual(hh):
        y = act(hh, x, rep)
        r = mu_shifted(y, rep, spec, setting)
        return r, float(np.sqrt(max(inner_product(r, r, spec), 0.0)))

    def sup_log(hh):
        worst = 0.0
        for i, b in enumerate(hh.blocks):
            if setting.modes[i] == FROZEN:
                continue
            ev = np.linalg.eigvalsh(b.conj().T @ b)
            ev = np.clip(ev, 1e-300, None)
            worst = max(worst, 0.5 * float(np.max(np.abs(np.log(ev)))))
        return worst

    r, rnorm = residual(h)
    trajectory = [rnorm]
    rejections = []
    accepted_run = 0
    it = 0
    while it < max_iter and rnorm > tol:
        it += 1
        gstep = GroupElement(
            tuple(
                expm(-1j * step * b) if setting.modes[i] != FROZEN else np.eye(b.shape[0], dtype=complex)
                for i, b in enumerate(r.blocks)
            ),
            "complexified",
        )
        cand = gstep.compose(h)
        rc, rcnorm = residual(cand)
        if not np.isfinite(rcnorm):
            return FlowResult(False, it, rnorm, trajectory, h, sup_log(h),
                              rejections, "non-finite residual")
        # strict decrease: equal-residual steps are cycles, not progress
        if rcnorm <= rnorm * (1 - 1e-13) or rcnorm <= tol:
            h, r, rnorm = cand, rc, rcnorm
            trajectory.append(rnorm)
            accepted_run += 1
            if accepted_run >= 5:
                step = min(step * 2.0, step_cap)
                accepted_run = 0
        else:
            rejections.append(it)
            step *= 0.5
            accepted_run = 0
            if step < 1e-14:
                break
        if sup_log(h) > metric_cutoff:
            return FlowResult(False, it, rnorm, trajectory, h, sup_log(h),
                              rejections, "metric blow-up")
    converged = bool(rnorm <= tol)
    return FlowResult(converged, it, rnorm, trajectory, h, sup_log(h), rejections,
                      "" if converged else "max_iter")
