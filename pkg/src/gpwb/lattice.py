"""Flat-torus lattice gauge layer: link fields, curvature, dbar operators,
holomorphic sections, and the pointwise moment-map residual.

Conventions fixed here and relied on everywhere else:

* N x N periodic grid, spacing 1/N, total volume 1; site (s, t), axis 0
  hops s -> s+1, axis 1 hops t -> t+1.
* ``U[mu][s, t]`` transports fiber(x) -> fiber(x + mu_hat); covariant
  forward difference is U^-1 s(x + mu_hat) - s(x).
* plaquette P(x) = U1(x)^-1 U0(x+t)^-1 U1(x+s) U0(x); the Hermitian
  curvature block is i N^2 log P(x), and the constant-curvature bundle
  with d holomorphic sections has i*Lambda F = +2 pi d.
* degrees are reported in units where a Chern-number-d line bundle has
  degree 2 pi d.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .groups import CONSTANT, FROZEN, FULL, ProductGroupSpec, SubgroupSetting
from .reps import ADJOINT, DUAL, STANDARD, TRIVIAL, RepSpec

TWO_PI = 2.0 * np.pi

# one-sided first-derivative stencils; order 3 keeps the symbol free of
# spurious zeros while order 1 reproduces the plain forward difference
STENCILS = {
    1: (-1.0, 1.0),
    2: (-1.5, 2.0, -0.5),
    3: (-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0),
    4: (-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25),
}
DEFAULT_STENCIL = 3


@dataclass(frozen=True)
class TorusLattice:
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"lattice needs at least 4 sites per side, got {self.n}")

    @property
    def spacing(self):
        return 1.0 / self.n

    @property
    def sites(self):
        return self.n * self.n

    @property
    def volume(self):
        return 1.0


def build_torus(n: int) -> TorusLattice:
    return TorusLattice(int(n))


@dataclass
class LatticeBundle:
    """Rank-r bundle: links[mu, s, t] is the r x r transport matrix."""

    lattice: TorusLattice
    rank: int
    links: np.ndarray  # (2, N, N, r, r) complex
    summand_degrees: tuple = ()  # intended Chern numbers when decomposable

    def copy(self):
        return LatticeBundle(self.lattice, self.rank, self.links.copy(), self.summand_degrees)

    def condition_report(self):
        sv = np.linalg.svd(self.links.reshape(-1, self.rank, self.rank), compute_uv=False)
        return float(np.max(sv[:, 0] / sv[:, -1]))


def trivial_bundle(lat: TorusLattice, rank=1) -> LatticeBundle:
    n = lat.n
    links = np.broadcast_to(np.eye(rank, dtype=complex), (2, n, n, rank, rank)).copy()
    return LatticeBundle(lat, rank, links, (0,) * rank)


def make_constant_curvature_line_bundle(lat: TorusLattice, d: int) -> LatticeBundle:
    """Abelian configuration with uniform plaquette phase and degree 2 pi d.

    Twisted-boundary construction: the s-links carry a t-dependent phase
    and one row of t-links closes the twist.  Guarded so each plaquette
    phase stays well inside the principal branch.
    """
    d = int(d)
    n = lat.n
    if abs(d) > n * n / 4:
        raise ValueError(f"degree {d} too large for an {n}x{n} lattice (|d| <= N^2/4)")
    s = np.arange(n)[:, None] * np.ones(n)[None, :]
    t = np.ones(n)[:, None] * np.arange(n)[None, :]
    u0 = np.exp(2j * np.pi * d * t / n**2)
    u1 = np.ones((n, n), dtype=complex)
    u1[:, n - 1] = np.exp(-2j * np.pi * d * s[:, n - 1] / n)
    links = np.zeros((2, n, n, 1, 1), dtype=complex)
    links[0, :, :, 0, 0] = u0
    links[1, :, :, 0, 0] = u1
    return LatticeBundle(lat, 1, links, (d,))


def direct_sum_bundle(lat: TorusLattice, degrees) -> LatticeBundle:
    """Block-diagonal sum of constant-curvature line bundles."""
    parts = [make_constant_curvature_line_bundle(lat, d) for d in degrees]
    r = len(parts)
    n = lat.n
    links = np.zeros((2, n, n, r, r), dtype=complex)
    for k, p in enumerate(parts):
        links[:, :, :, k, k] = p.links[:, :, :, 0, 0]
    return LatticeBundle(lat, r, links, tuple(int(d) for d in degrees))


def plaquette_field(links: np.ndarray) -> np.ndarray:
    """P(x) = U1(x)^-1 U0(x+t)^-1 U1(x+s) U0(x), shape (N, N, r, r)."""
    u0, u1 = links[0], links[1]
    u0t = np.roll(u0, -1, axis=1)
    u1s = np.roll(u1, -1, axis=0)
    inv = np.linalg.inv
    return inv(u1) @ inv(u0t) @ u1s @ u0


def _log_unitary(p: np.ndarray) -> np.ndarray:
    """Principal log of a stack of (nearly) unitary matrices."""
    r = p.shape[-1]
    if r == 1:
        return 1j * np.angle(p)
    w, v = np.linalg.eig(p)
    lw = 1j * np.angle(w)
    out = v @ (lw[..., None] * np.linalg.inv(v))
    return 0.5 * (out - np.swapaxes(out, -1, -2).conj())


def curvature_field(bundle_links: np.ndarray, n: int) -> np.ndarray:
    """Hermitian blocks i N^2 log P(x) of shape (N, N, r, r)."""
    p = plaquette_field(bundle_links)
    return (1j * n * n) * _log_unitary(p)


def lattice_degree(bundle_or_links) -> float:
    """Integrated trace of i*Lambda F: minus the sum over plaquettes of
    arg det P in this orientation; equals 2 pi * (Chern number) for smooth
    configurations."""
    links = bundle_or_links.links if isinstance(bundle_or_links, LatticeBundle) else bundle_or_links
    p = plaquette_field(links)
    if p.shape[-1] == 1:
        ang = np.angle(p[..., 0, 0])
    else:
        ang = np.angle(np.linalg.det(p))
    if np.max(np.abs(ang)) > 0.9 * np.pi:
        warnings.warn("plaquette phase near the branch cut; degree may be ambiguous")
    return float(-np.sum(ang))


# ---------------------------------------------------------------------------
# induced transports on V


def _slot_link(mat, action):
    if action == STANDARD:
        return mat
    if action == DUAL:
        return np.swapaxes(np.linalg.inv(mat), -1, -2)
    if action == ADJOINT:
        inv_t = np.swapaxes(np.linalg.inv(mat), -1, -2)
        return _batched_kron(mat, inv_t)
    raise ValueError(action)


def _batched_kron(a, b):
    """Kronecker product over the last two axes of stacked matrices."""
    ra, ca = a.shape[-2:]
    rb, cb = b.shape[-2:]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(*a.shape[:-2], ra * rb, ca * cb)


def section_transport(rep: RepSpec, factor_links) -> np.ndarray:
    """Per-site, per-direction transport matrices on V, shape (2,N,N,D,D).

    ``factor_links[i]`` is the (2,N,N,n_i,n_i) link field of factor i.
    """
    mats = None
    for sl in rep.slots:
        if sl.action == TRIVIAL:
            m = np.broadcast_to(np.eye(sl.dim, dtype=complex),
                                factor_links[0].shape[:3] + (sl.dim, sl.dim))
        else:
            m = _slot_link(factor_links[sl.factor], sl.action)
        mats = m if mats is None else _batched_kron(mats, m)
    return mats


# ---------------------------------------------------------------------------
# dbar operator and holomorphic sections


def dbar_matrix(lat: TorusLattice, vlinks: np.ndarray, order=DEFAULT_STENCIL) -> sp.csr_matrix:
    """Sparse forward covariant-difference operator D0 + i D1 on section
    fields, scaled by 1/spacing.

    ``order=1`` is the plain two-point forward difference
    (U^-1 s(x+mu) - s(x)) * N; higher orders use the matching one-sided
    stencils with multi-step transports.
    """
    coef = STENCILS[order]
    n = lat.n
    dimv = vlinks.shape[-1]
    nsite = n * n
    rows, cols, vals = [], [], []
    eye = np.eye(dimv, dtype=complex)
    site_index = np.arange(nsite).reshape(n, n)

    for mu, weight in ((0, 1.0), (1, 1j)):
        # cumulative transports along direction mu: T[j] maps fiber(x) -> fiber(x+j mu)
        transport = np.broadcast_to(eye, (n, n, dimv, dimv)).copy()
        shifted = vlinks[mu].copy()
        for j, cj in enumerate(coef):
            if j == 0:
                blocks = (weight * cj * n) * np.broadcast_to(eye, (n, n, dimv, dimv))
                tgt = site_index
            else:
                transport = shifted @ transport if j > 1 else vlinks[mu].copy()
                blocks = (weight * cj * n) * np.linalg.inv(transport)
                tgt = np.roll(site_index, -j, axis=mu)
                shifted = np.roll(vlinks[mu], -j, axis=mu)
            src = site_index
            for a in range(dimv):
                for b in range(dimv):
                    rows.append((src * dimv + a).ravel())
                    cols.append((tgt * dimv + b).ravel())
                    vals.append(blocks[:, :, a, b].ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    out = sp.coo_matrix((vals, (rows, cols)), shape=(nsite * dimv, nsite * dimv))
    return out.tocsr()


def holomorphic_sections(lat: TorusLattice, vlinks: np.ndarray, count: int,
                         order=DEFAULT_STENCIL, strict=False, gap_tol=1e-6):
    """Orthonormal numerical kernel vectors of the dbar operator.

    Returns (sections, residuals, gap_ratio) where ``sections`` has shape
    (count, N, N, D).  With ``strict`` the call fails when the requested
    count exceeds the numerical kernel (gap test at ``gap_tol``).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    D = dbar_matrix(lat, vlinks, order=order).toarray()
    _, svals, vh = np.linalg.svd(D)
    svals = svals[::-1]
    vh = vh[::-1]
    residuals = svals[:count]
    nxt = svals[count] if count < len(svals) else np.inf
    gap_ratio = float(nxt / max(residuals[-1], 1e-300))
    if strict and (residuals[-1] > gap_tol * nxt):
        raise ValueError(
            f"requested {count} sections but numerical kernel is smaller; "
            f"residuals {residuals}, next singular value {nxt:.3e}"
        )
    n = lat.n
    dimv = vlinks.shape[-1]
    secs = vh[:count].conj().reshape(count, n, n, dimv)
    # L2-normalise with volume weight 1/N^2
    secs = secs * n
    return secs, residuals * 1.0, gap_ratio


# ---------------------------------------------------------------------------
# pair state


@dataclass
class FactorState:
    bundle: LatticeBundle
    mode: str  # full / frozen / constant

    def copy(self):
        return FactorState(self.bundle.copy(), self.mode)


@dataclass
class LatticePairState:
    """Holomorphic data (links + section) with per-factor metric exponents.

    The holomorphic pair never changes; flows act on the metric exponents
    ``u`` (Hermitian per site for mode "full", one global Hermitian matrix
    for mode "constant", absent for frozen factors).
    """

    lattice: TorusLattice
    spec: ProductGroupSpec
    rep: RepSpec
    setting: SubgroupSetting
    factors: list
    section: np.ndarray  # (N, N, D)
    construction_residual: float = 0.0
    kind: str = ""
    params: dict = field(default_factory=dict)
    u: dict = field(default_factory=dict)  # factor index -> exponent array

    def __post_init__(self):
        for i, f in enumerate(self.factors):
            if i in self.u:
                continue
            n = self.spec.factor_dims[i]
            if f.mode == FULL:
                self.u[i] = np.zeros((self.lattice.n, self.lattice.n, n, n), complex)
            elif f.mode == CONSTANT:
                self.u[i] = np.zeros((n, n), complex)

    def copy(self):
        st = LatticePairState(
            self.lattice, self.spec, self.rep, self.setting,
            [f.copy() for f in self.factors], self.section.copy(),
            self.construction_residual, self.kind, dict(self.params),
            {k: v.copy() for k, v in self.u.items()},
        )
        return st

    def factor_links_raw(self):
        return [f.bundle.links for f in self.factors]

    def corrected_links(self, i):
        """Metric-corrected unitary links of factor i (transverse-gradient
        phase correction; exact curvature response for abelian factors)."""
        f = self.factors[i]
        if f.mode != FULL:
            return f.bundle.links
        return corrected_links(f.bundle.links, self.u[i])

    def all_corrected_links(self):
        return [self.corrected_links(i) for i in range(len(self.factors))]

    def metric_frame_section(self):
        """Section in the metric-orthonormal frame: act(e^{u(x)}, Phi(x))."""
        return apply_metric_exponents(self.section, self.rep, self.u, self.factors)

    def sup_log_metric(self):
        worst = 0.0
        for i, f in enumerate(self.factors):
            if f.mode == FROZEN:
                continue
            uu = self.u[i]
            if f.mode == CONSTANT:
                ev = np.linalg.eigvalsh(0.5 * (uu + uu.conj().T))
                worst = max(worst, 2.0 * float(np.max(np.abs(ev))) if ev.size else 0.0)
            else:
                ev = np.linalg.eigvalsh(0.5 * (uu + np.swapaxes(uu, -1, -2).conj()))
                worst = max(worst, 2.0 * float(np.max(np.abs(ev))))
        return worst


def corrected_links(links: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Multiply links by exp(-i * kappa * transverse centered difference of u).

    kappa = -1: the s-links pick up the centered t-difference and the
    t-links minus the centered s-difference, transported to the base site.
    The induced change of i N^2 log P is exactly the operator assembled by
    ``curvature_response_matrix`` for abelian factors.
    """
    r = links.shape[-1]
    out = links.copy()
    # transported neighbour values of u along direction nu
    def transported_diff(nu):
        lk = links[nu]
        up = np.linalg.inv(lk) @ np.roll(u, -1, axis=nu) @ lk
        lk_m = np.roll(links[nu], 1, axis=nu)
        um = lk_m @ np.roll(u, 1, axis=nu) @ np.linalg.inv(lk_m)
        return 0.5 * (up - um)

    dt_u = transported_diff(1)
    ds_u = transported_diff(0)
    out[0] = links[0] @ _expm_herm(-1j * dt_u)
    out[1] = links[1] @ _expm_herm(1j * ds_u)
    return out


def _expm_herm(a):
    """exp of a stack of anti-Hermitian matrices i*H (returns unitaries)."""
    r = a.shape[-1]
    if r == 1:
        return np.exp(a)
    h = 0.5 * (a - np.swapaxes(a, -1, -2).conj()) / 1j
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def curvature_response_matrix(lat: TorusLattice) -> sp.csr_matrix:
    """Exact linear response L of the abelian curvature i N^2 log P to the
    metric exponent u under ``corrected_links``; Hermitian part positive
    semidefinite."""
    n = lat.n
    n2 = n * n
    idx = np.arange(n2).reshape(n, n)
    # stencil of -N^2 * gamma * circ with gamma = -1 (see corrected_links)
    offsets = {(0, 0): 1.0, (1, 0): 0.5, (0, 1): 0.5, (-1, 0): -0.5,
               (0, -1): -0.5, (2, 0): -0.5, (0, 2): -0.5}
    rows, cols, vals = [], [], []
    for (ds, dt), w in offsets.items():
        tgt = np.roll(np.roll(idx, -ds, axis=0), -dt, axis=1)
        rows.append(idx.ravel())
        cols.append(tgt.ravel())
        vals.append(np.full(n2, w * n * n))
    L = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n2, n2),
    )
    return L.tocsr()


# ---------------------------------------------------------------------------
# metric-frame section and batched moment maps


def apply_metric_exponents(section, rep: RepSpec, u: dict, factors) -> np.ndarray:
    """act(e^{u(x)}, Phi(x)) sitewise, for the tuple of metric exponents."""
    n0, n1 = section.shape[:2]
    t = section.reshape(n0, n1, *rep.shape)
    for axis, sl in enumerate(rep.slots):
        if sl.action == TRIVIAL or sl.factor not in u:
            continue
        f = sl.factor
        uu = u[f]
        if factors[f].mode == CONSTANT:
            uu = np.broadcast_to(uu, (n0, n1) + uu.shape)
        g = _expm_pos(uu)
        if sl.action == STANDARD:
            m = g
        elif sl.action == DUAL:
            m = np.swapaxes(np.linalg.inv(g), -1, -2)
        else:  # adjoint
            m = _batched_kron(g, np.swapaxes(np.linalg.inv(g), -1, -2))
        t = np.moveaxis(t, 2 + axis, 2)
        shp = t.shape
        t = np.einsum("xyij,xyj...->xyi...", m, t.reshape(n0, n1, shp[2], -1)).reshape(shp)
        t = np.moveaxis(t, 2, 2 + axis)
    return t.reshape(n0, n1, -1)


def _expm_pos(u):
    """exp of a stack of Hermitian matrices (positive result)."""
    r = u.shape[-1]
    if r == 1:
        return np.exp(u.real)
    h = 0.5 * (u + np.swapaxes(u, -1, -2).conj())
    w, v = np.linalg.eigh(h)
    return (v * np.exp(w)[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def dbar_operator(state: LatticePairState, order=DEFAULT_STENCIL) -> sp.csr_matrix:
    """Sparse dbar operator of the state's holomorphic structure, acting on
    flattened section fields through the representation."""
    vlinks = section_transport(state.rep, state.factor_links_raw())
    return dbar_matrix(state.lattice, vlinks, order=order)


def state_sections(state: LatticePairState, count: int, order=DEFAULT_STENCIL,
                   strict=False):
    """Orthonormal numerical dbar-kernel sections of the state's bundle."""
    vlinks = section_transport(state.rep, state.factor_links_raw())
    return holomorphic_sections(state.lattice, vlinks, count, order=order,
                                strict=strict)


def random_unitary_gauge(spec: ProductGroupSpec, lat: TorusLattice, rng):
    """Site-dependent unitary gauge transformation, one field per factor."""
    out = []
    for n in spec.factor_dims:
        a = rng.standard_normal((lat.n, lat.n, n, n)) + 1j * rng.standard_normal(
            (lat.n, lat.n, n, n)
        )
        q, r = np.linalg.qr(a)
        d = np.einsum("xyii->xyi", r)
        q = q * (d / np.abs(d))[..., None, :]
        out.append(q)
    return out


def gauge_transform(state: LatticePairState, kfields) -> LatticePairState:
    """Apply a sitewise unitary gauge transformation to the whole state:
    links conjugate, the section transforms through the representation and
    metric exponents conjugate."""
    new = state.copy()
    for i, f in enumerate(new.factors):
        k = kfields[i]
        for mu in (0, 1):
            kf = np.roll(k, -1, axis=mu)
            f.bundle.links[mu] = kf @ f.bundle.links[mu] @ np.swapaxes(k, -1, -2).conj()
        if f.mode == FULL:
            new.u[i] = k @ new.u[i] @ np.swapaxes(k, -1, -2).conj()
    # transform the section sitewise
    n0, n1 = new.section.shape[:2]
    t = new.section.reshape(n0, n1, *new.rep.shape)
    for axis, sl in enumerate(new.rep.slots):
        if sl.action == TRIVIAL:
            continue
        k = kfields[sl.factor]
        if sl.action == STANDARD:
            m = k
        elif sl.action == DUAL:
            m = np.swapaxes(np.linalg.inv(k), -1, -2)
        else:
            m = _batched_kron(k, np.swapaxes(np.linalg.inv(k), -1, -2))
        t = np.moveaxis(t, 2 + axis, 2)
        shp = t.shape
        t = np.einsum("xyij,xyj...->xyi...", m, t.reshape(n0, n1, shp[2], -1)).reshape(shp)
        t = np.moveaxis(t, 2, 2 + axis)
    new.section = t.reshape(n0, n1, -1)
    return new


def mu_factor_field(section_field, rep: RepSpec, factor_i: int) -> np.ndarray:
    """Sitewise moment-map block of one factor: (N, N, n_i, n_i)."""
    n0, n1 = section_field.shape[:2]
    t = section_field.reshape(n0, n1, *rep.shape)
    ni = rep.spec.factor_dims[factor_i]
    out = np.zeros((n0, n1, ni, ni), complex)
    for axis in rep.factor_slots(factor_i):
        sl = rep.slots[axis]
        m = np.moveaxis(t, 2 + axis, 2).reshape(n0, n1, sl.dim, -1)
        if sl.action == STANDARD:
            out += -1j * np.einsum("xyar,xybr->xyab", m, m.conj())
        elif sl.action == DUAL:
            out += 1j * np.einsum("xyar,xybr->xyab", m, m.conj()).conj()
        else:  # adjoint: -i [B, B^dagger] summed over the other indices
            B = m.reshape(n0, n1, ni, ni, -1)
            bh = np.swapaxes(B, 2, 3).conj()
            comm = np.einsum("xyijr,xyjkr->xyik", B, bh) - np.einsum(
                "xyijr,xyjkr->xyik", bh, B
            )
            out += -1j * comm
    return out


def pointwise_residual(state: LatticePairState):
    """Skew-Hermitian residual blocks of the shifted subgroup moment map.

    Per site and unfrozen factor: N^2 log P + mu_f(Psi) + i c_f I, with the
    constant-mode blocks replaced by their site average.  Returns
    (blocks dict, l2 norm, linf norm); norms use the volume-1 weighting.
    """
    n = state.lattice.n
    psi = state.metric_frame_section()
    blocks = {}
    for i, f in enumerate(state.factors):
        if f.mode == FROZEN:
            continue
        ni = state.spec.factor_dims[i]
        c_i = state.setting.central_scalars[i]
        if state.rep.factor_slots(i):
            mu = mu_factor_field(psi, state.rep, i)
        else:
            mu = np.zeros((n, n, ni, ni), complex)
        if f.mode == CONSTANT:
            r = np.mean(mu, axis=(0, 1)) + 1j * c_i * np.eye(ni)
            blocks[i] = np.broadcast_to(r, (n, n, ni, ni)).copy()
        else:
            lam = _log_unitary(plaquette_field(state.corrected_links(i))) * (n * n)
            r = lam + mu + 1j * c_i * np.eye(ni)
            blocks[i] = r
    sq = 0.0
    linf = 0.0
    for i, r in blocks.items():
        if state.factors[i].mode == CONSTANT:
            sq += float(np.sum(np.abs(r[0, 0]) ** 2))
            linf = max(linf, float(np.linalg.norm(r[0, 0])))
        else:
            persite = np.sum(np.abs(r) ** 2, axis=(2, 3))
            sq += float(np.mean(persite))
            linf = max(linf, float(np.sqrt(np.max(persite))))
    return blocks, float(np.sqrt(sq)), linf
