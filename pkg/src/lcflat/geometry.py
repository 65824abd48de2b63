"""Pointwise Hermitian geometry of a metric jet.

Everything here consumes a `MetricJet` — the order-2 Wirtinger jet of a
Hermitian metric h_{ij̄} at one point — and produces connection coefficients,
curvature tensors, adjoint forms and scalar invariants.  Two independent
computation paths to the Levi-Civita Ricci form are provided:

* `lc_ricci`: trace of the (1,1)-part of the Levi-Civita curvature tensor,
  built from the mixed connection symbols;
* `lc_ricci_via_relation`: Chern-Ricci form minus half the d-adjoint defect
  ½(∂∂*ω + ∂̄∂̄*ω).

Their agreement on arbitrary metrics is the central identity this package
verifies; the engineered `debug_corruption` context breaks it on purpose so
the test harness can prove the comparison has teeth.

Index conventions: the metric matrix `H[i][j]` holds h_{ij̄}; the inverse
tensor h^{kℓ̄} is `Hinv[ℓ][k]` where `Hinv` is the plain matrix inverse of
`H` (so that h^{kℓ̄} h_{iℓ̄} = δ^k_i).  Connection arrays are indexed with
the upper index first: `hol[k][i][j]` is Γ^k_{ij}, `anti[k][i][j]` is
Γ^k_{īj} (first lower slot barred).
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .wjet import Point, WJet, conj, d_dz, d_dzbar, jet_const, log

# Toggled by `debug_corruption`; flips the sign of the mixed Levi-Civita
# symbols so that the two Ricci paths disagree (mutation test hook).
_CORRUPT_ANTI_SIGN = False


@contextmanager
def debug_corruption():
    """Deliberately corrupt the mixed connection symbols (testing only)."""
    global _CORRUPT_ANTI_SIGN
    _CORRUPT_ANTI_SIGN = True
    try:
        yield
    finally:
        _CORRUPT_ANTI_SIGN = False


# -- types ---------------------------------------------------------------------


@dataclass
class MetricJet:
    """Order-2 jet of a Hermitian metric at a point.

    h[i][j] is the jet of h_{ij̄}; the value part must be Hermitian positive
    definite and the jets must satisfy h_{ij̄} = conj(h_{jī}).
    """

    n: int
    h: list[list[WJet]]
    point: Point

    def values(self) -> np.ndarray:
        return np.array([[self.h[i][j].value for j in range(self.n)] for i in range(self.n)])

    def hermitian_jet_residual(self) -> float:
        r = 0.0
        for i in range(self.n):
            for j in range(self.n):
                r = max(r, float(np.max(np.abs(self.h[i][j].coeffs - conj(self.h[j][i]).coeffs))))
        return r


@dataclass
class Form11:
    """(1,1)-form √−1 A_{ij̄} dz^i ∧ dz̄^j, stored as the matrix A."""

    A: np.ndarray

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.A - self.A.conj().T)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.A)))


@dataclass
class Form10:
    """(1,0)-form a_i dz^i with order-1 jets retained per component."""

    jets: tuple[WJet, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([j.value for j in self.jets])


@dataclass
class Form01:
    """(0,1)-form a_ī dz̄^i with order-1 jets retained per component."""

    jets: tuple[WJet, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([j.value for j in self.jets])


@dataclass
class Christoffels:
    """Connection symbols with order-1 jets (one more derivative is exact).

    chern[k][i][j]   = Γ^k_{ij}  of the Chern connection (h^{kℓ̄} ∂_i h_{jℓ̄})
    lc_hol[k][i][j]  = Γ^k_{ij}  of the Levi-Civita connection (symmetric in ij)
    lc_anti[k][i][j] = Γ^k_{īj}  mixed Levi-Civita symbols
    """

    chern: list[list[list[WJet]]]
    lc_hol: list[list[list[WJet]]]
    lc_anti: list[list[list[WJet]]]

    def _values(self, arr) -> np.ndarray:
        n = len(arr)
        return np.array(
            [[[arr[k][i][j].value for j in range(n)] for i in range(n)] for k in range(n)]
        )

    def chern_values(self) -> np.ndarray:
        return self._values(self.chern)

    def lc_hol_values(self) -> np.ndarray:
        return self._values(self.lc_hol)

    def lc_anti_values(self) -> np.ndarray:
        return self._values(self.lc_anti)


@dataclass
class Tensor4:
    """Curvature tensor R_{ij̄kℓ̄}, indexed [i, j, k, l]."""

    R: np.ndarray


@dataclass
class LCCurvature:
    """Levi-Civita curvature: upper[l,i,j,k] = 𝔯R^ℓ_{ij̄k}, lowered[i,j,k,l] = 𝔯R_{ij̄kℓ̄}."""

    upper: np.ndarray
    lowered: np.ndarray


@dataclass
class Scalars:
    """Scalar invariants at the point.

    s_C          Chern scalar curvature
    s_LC         Levi-Civita scalar curvature (double trace of 𝔯R_{ij̄kℓ̄})
    s            Riemannian scalar curvature of the background real metric
    torsion_sq   |T|²
    delstar_sq   |∂*ω|²
    ddstar_pairing       ⟨∂∂*ω + ∂̄∂̄*ω, ω⟩  (real)
    ddstar_hol_pairing   ⟨∂∂*ω, ω⟩          (complex in general)
    """

    s_C: float
    s_LC: float
    s: float
    torsion_sq: float
    delstar_sq: float
    ddstar_pairing: float
    ddstar_hol_pairing: complex


# -- internal jet linear algebra ----------------------------------------------


def _check_metric(m: MetricJet) -> np.ndarray:
    """Validate and return the value matrix; raises on a non-usable metric."""
    vals = m.values()
    if not np.allclose(vals, vals.conj().T, atol=1e-10 * (1 + np.max(np.abs(vals)))):
        raise ValueError("metric value matrix is not Hermitian")
    eig = np.linalg.eigvalsh(vals)
    if eig.min() <= 0:
        raise ValueError(
            f"metric value matrix is not positive definite (min eigenvalue {eig.min():.3g})"
        )
    return vals


def _jet_matrix_inverse(m: MetricJet) -> list[list[WJet]]:
    """Jet of the matrix inverse via H = H0(I + E), E nilpotent to order 2."""
    n = m.n
    vals = _check_metric(m)
    a = np.linalg.inv(vals)
    # E = H0^{-1} H - I has zero constant term, so (I+E)^{-1} = I - E + E^2 exactly.
    E = [
        [
            sum((a[i, k] * m.h[k][j] for k in range(n)), jet_const(0.0, m.h[0][0].n_vars))
            - (1.0 if i == j else 0.0)
            for j in range(n)
        ]
        for i in range(n)
    ]
    E2 = [
        [
            sum((E[i][k] * E[k][j] for k in range(n)), jet_const(0.0, m.h[0][0].n_vars))
            for j in range(n)
        ]
        for i in range(n)
    ]
    inv = [
        [
            jet_const(1.0 if i == j else 0.0, m.h[0][0].n_vars) - E[i][j] + E2[i][j]
            for j in range(n)
        ]
        for i in range(n)
    ]
    # Multiply by H0^{-1} on the right: (I - E + E^2) a
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = jet_const(0.0, m.h[0][0].n_vars)
            for k in range(n):
                acc = acc + inv[i][k] * a[k, j]
            row.append(acc)
        out.append(row)
    return out


def _jet_det(h: list[list[WJet]]) -> WJet:
    """Determinant of a small jet matrix by Laplace expansion."""
    n = len(h)
    if n == 1:
        return h[0][0]
    if n == 2:
        return h[0][0] * h[1][1] - h[0][1] * h[1][0]
    det = jet_const(0.0, h[0][0].n_vars)
    for j in range(n):
        minor = [[h[r][c] for c in range(n) if c != j] for r in range(1, n)]
        det = det + ((-1) ** j) * h[0][j] * _jet_det(minor)
    return det


def inverse_transpose_values(m: MetricJet) -> np.ndarray:
    """Matrix G with G[i, j] = h^{ij̄} (inverse metric in tensor index order)."""
    return np.linalg.inv(_check_metric(m)).T


# -- connections ---------------------------------------------------------------


def christoffels(m: MetricJet) -> Christoffels:
    """Chern and Levi-Civita connection symbols with order-1 jets.

    Γ^k_{ij}(Chern) = h^{kℓ̄} ∂h_{jℓ̄}/∂z^i
    Γ^k_{ij}(LC)    = ½ h^{kℓ̄} (∂h_{jℓ̄}/∂z^i + ∂h_{iℓ̄}/∂z^j)
    Γ^k_{īj}(LC)    = ½ h^{kℓ̄} (∂h_{jℓ̄}/∂z̄^i − ∂h_{jī}/∂z̄^ℓ)
    """
    n = m.n
    nv = m.h[0][0].n_vars
    Hinv = _jet_matrix_inverse(m)

    def hup(k, l):
        return Hinv[l][k]  # h^{kℓ̄}

    dh = [[[d_dz(m.h[j][l], i + 1) for l in range(n)] for j in range(n)] for i in range(n)]
    dbh = [[[d_dzbar(m.h[j][l], i + 1) for l in range(n)] for j in range(n)] for i in range(n)]

    zero = jet_const(0.0, nv)
    chern = [
        [
            [sum((hup(k, l) * dh[i][j][l] for l in range(n)), zero) for j in range(n)]
            for i in range(n)
        ]
        for k in range(n)
    ]
    lc_hol = [
        [
            [0.5 * (chern[k][i][j] + chern[k][j][i]) for j in range(n)]
            for i in range(n)
        ]
        for k in range(n)
    ]
    lc_anti = [
        [
            [
                sum(
                    (0.5 * (hup(k, l) * (dbh[i][j][l] - dbh[l][j][i])) for l in range(n)),
                    zero,
                )
                for j in range(n)
            ]
            for i in range(n)
        ]
        for k in range(n)
    ]
    if _CORRUPT_ANTI_SIGN:
        lc_anti = [
            [[-lc_anti[k][i][j] for j in range(n)] for i in range(n)] for k in range(n)
        ]
    return Christoffels(chern=chern, lc_hol=lc_hol, lc_anti=lc_anti)


# -- Chern curvature ------------------------------------------------------------


def chern_curvature(m: MetricJet) -> Tensor4:
    """R_{ij̄kℓ̄} = −∂²h_{kℓ̄}/∂z^i∂z̄^j + h^{pq̄} (∂h_{kq̄}/∂z^i)(∂h_{pℓ̄}/∂z̄^j)."""
    n = m.n
    vals = _check_metric(m)
    Hinv = np.linalg.inv(vals)
    dval = np.array(
        [[[m.h[k][q].deriv_value(*_unit(n, i, None)) for q in range(n)] for k in range(n)]
         for i in range(n)]
    )
    dbval = np.array(
        [[[m.h[p][l].deriv_value(*_unit(n, None, j)) for l in range(n)] for p in range(n)]
         for j in range(n)]
    )
    sec = np.array(
        [
            [
                [[m.h[k][l].deriv_value(*_unit2(n, i, j)) for l in range(n)] for k in range(n)]
                for j in range(n)
            ]
            for i in range(n)
        ]
    )
    # h^{pq̄} = Hinv[q, p]
    quad = np.einsum("qp,ikq,jpl->ijkl", Hinv, dval, dbval)
    return Tensor4(-sec + quad)


def _unit(n, holo_i, anti_j):
    holo = [0] * n
    anti = [0] * n
    if holo_i is not None:
        holo[holo_i] = 1
    if anti_j is not None:
        anti[anti_j] = 1
    return tuple(holo), tuple(anti)


def _unit2(n, holo_i, anti_j):
    holo = [0] * n
    anti = [0] * n
    holo[holo_i] += 1
    anti[anti_j] += 1
    return tuple(holo), tuple(anti)


def chern_ricci(m: MetricJet) -> Form11:
    """Chern-Ricci form R_{ij̄} = −∂² log det(h) / ∂z^i ∂z̄^j."""
    n = m.n
    _check_metric(m)
    ld = log(_jet_det(m.h))
    A = np.array(
        [[-ld.deriv_value(*_unit2(n, i, j)) for j in range(n)] for i in range(n)]
    )
    return Form11(A)


def chern_ricci_trace_path(m: MetricJet) -> Form11:
    """Chern-Ricci via the h^{kℓ̄}-trace of the full curvature tensor."""
    R = chern_curvature(m).R
    Hinv = np.linalg.inv(_check_metric(m))
    # h^{kℓ̄} = Hinv[ℓ, k]
    return Form11(np.einsum("lk,ijkl->ij", Hinv, R))


def chern_scalar(m: MetricJet) -> float:
    G = inverse_transpose_values(m)
    return float(np.einsum("ij,ij->", G, chern_ricci(m).A).real)


# -- Levi-Civita curvature -------------------------------------------------------


def lc_curvature(m: MetricJet) -> LCCurvature:
    """(1,1)-part of the Levi-Civita curvature on the holomorphic tangent bundle.

    𝔯R^ℓ_{ij̄k} = −(∂Γ^ℓ_{ik}/∂z̄^j − ∂Γ^ℓ_{j̄k}/∂z^i + Γ^s_{ik} Γ^ℓ_{j̄s} − Γ^s_{j̄k} Γ^ℓ_{si})

    and the lowered tensor 𝔯R_{ij̄kℓ̄} = h_{sℓ̄} 𝔯R^s_{ij̄k}.
    """
    n = m.n
    vals = _check_metric(m)
    ch = christoffels(m)
    hol_v = ch.lc_hol_values()
    anti_v = ch.lc_anti_values()
    d_hol = np.array(
        [
            [
                [[d_dzbar(ch.lc_hol[l][i][k], j + 1).value for k in range(n)] for j in range(n)]
                for i in range(n)
            ]
            for l in range(n)
        ]
    )  # [l, i, j, k] = ∂Γ^ℓ_{ik}/∂z̄^j
    d_anti = np.array(
        [
            [
                [[d_dz(ch.lc_anti[l][j][k], i + 1).value for k in range(n)] for j in range(n)]
                for i in range(n)
            ]
            for l in range(n)
        ]
    )  # [l, i, j, k] = ∂Γ^ℓ_{j̄k}/∂z^i
    quad1 = np.einsum("sik,ljs->lijk", hol_v, anti_v)
    quad2 = np.einsum("sjk,lsi->lijk", anti_v, hol_v)
    upper = -(d_hol - d_anti + quad1 - quad2)
    lowered = np.einsum("sl,sijk->ijkl", vals, upper)
    return LCCurvature(upper=upper, lowered=lowered)


def lc_ricci(m: MetricJet) -> Form11:
    """First Levi-Civita Ricci form 𝔯R^{(1)}_{ij̄} = 𝔯R^k_{ij̄k}."""
    upper = lc_curvature(m).upper
    return Form11(np.einsum("kijk->ij", upper))


# -- adjoint forms ---------------------------------------------------------------


def _anti_trace_jets(m: MetricJet) -> list[WJet]:
    """Order-1 jets of Γ^k_{j̄k} (trace over the upper and second lower slot)."""
    ch = christoffels(m)
    n = m.n
    nv = m.h[0][0].n_vars
    return [
        sum((ch.lc_anti[k][j][k] for k in range(n)), jet_const(0.0, nv)) for j in range(n)
    ]


def del_star(m: MetricJet) -> tuple[Form01, Form10]:
    """Adjoint forms  ∂*ω = −2√−1 Γ^k_{j̄k} dz̄^j  and  ∂̄*ω = 2√−1 conj(Γ^k_{īk}) dz^i."""
    traces = _anti_trace_jets(m)
    a01 = tuple(-2j * t for t in traces)
    a10 = tuple(2j * conj(t) for t in traces)
    return Form01(a01), Form10(a10)


def d_del_star_parts(m: MetricJet) -> tuple[Form11, Form11]:
    """The (1,1)-forms ∂∂*ω and ∂̄∂̄*ω (in the √−1 A_{ij̄} dz^i∧dz̄^j convention)."""
    n = m.n
    traces = _anti_trace_jets(m)
    dz_traces = np.array(
        [[d_dz(traces[j], i + 1).value for j in range(n)] for i in range(n)]
    )  # [i, j] = ∂_i Γ^k_{j̄k}
    A1 = -2.0 * dz_traces
    A2 = -2.0 * dz_traces.conj().T
    return Form11(A1), Form11(A2)


def d_del_star(m: MetricJet) -> Form11:
    """½(∂∂*ω + ∂̄∂̄*ω); Hermitian by construction."""
    p1, p2 = d_del_star_parts(m)
    return Form11(0.5 * (p1.A + p2.A))


def lc_ricci_via_relation(m: MetricJet) -> Form11:
    """Second path to the Levi-Civita Ricci form: Ric(ω) − ½(∂∂*ω + ∂̄∂̄*ω)."""
    return Form11(chern_ricci(m).A - d_del_star(m).A)


# -- torsion and scalars ----------------------------------------------------------


def torsion(m: MetricJet) -> tuple[np.ndarray, float]:
    """Torsion T^k_{ij} = h^{kℓ̄}(∂h_{jℓ̄}/∂z^i − ∂h_{iℓ̄}/∂z^j) and its squared norm.

    |T|² = h_{kℓ̄} h^{ip̄} h^{jq̄} T^k_{ij} conj(T^ℓ_{pq}), summed over all (i, j).
    """
    n = m.n
    vals = _check_metric(m)
    Hinv = np.linalg.inv(vals)
    dval = np.array(
        [[[m.h[j][l].deriv_value(*_unit(n, i, None)) for l in range(n)] for j in range(n)]
         for i in range(n)]
    )  # [i, j, l] = ∂h_{jℓ̄}/∂z^i
    antis = dval - dval.transpose(1, 0, 2)
    # h^{kℓ̄} = Hinv[l, k]
    T = np.einsum("lk,ijl->kij", Hinv, antis)
    G = Hinv.T  # G[i, p] = h^{ip̄}
    tsq = np.einsum("kl,ip,jq,kij,lpq->", vals, G, G, T, T.conj())
    return T, float(tsq.real)


def form11_inner(alpha: np.ndarray, beta: np.ndarray, m: MetricJet) -> complex:
    """Pointwise inner product ⟨α, β⟩ = h^{ip̄} h^{qj̄} α_{ij̄} conj(β_{pq̄})."""
    G = inverse_transpose_values(m)
    return complex(np.einsum("ip,qj,ij,pq->", G, G, alpha, beta.conj()))


def form01_norm_sq(a: np.ndarray, m: MetricJet) -> float:
    """|a|² for a (0,1)-form a_ī dz̄^i:  Σ a_ī conj(a_j̄) h^{jī}."""
    Hinv = np.linalg.inv(_check_metric(m))
    # h^{jī} = Hinv[i, j]
    return float(np.einsum("i,j,ij->", a, a.conj(), Hinv).real)


def scalars(m: MetricJet) -> Scalars:
    """All scalar invariants; see the field-by-field description on `Scalars`."""
    vals = _check_metric(m)
    G = np.linalg.inv(vals).T
    ric = chern_ricci(m).A
    s_C = float(np.einsum("ij,ij->", G, ric).real)
    lowered = lc_curvature(m).lowered
    s_LC = float(np.einsum("ij,kl,ijkl->", G, G, lowered).real)
    _, tsq = torsion(m)
    a01, _ = del_star(m)
    dsq = form01_norm_sq(a01.values, m)
    p1, p2 = d_del_star_parts(m)
    pairing = complex(np.einsum("ij,ij->", G, p1.A + p2.A))
    pairing_hol = complex(np.einsum("ij,ij->", G, p1.A))
    return Scalars(
        s_C=s_C,
        s_LC=s_LC,
        s=riemannian_scalar(m),
        torsion_sq=tsq,
        delstar_sq=dsq,
        ddstar_pairing=float(pairing.real),
        ddstar_hol_pairing=pairing_hol,
    )


def kahler_defect(m: MetricJet) -> float:
    """max |∂_i h_{jℓ̄} − ∂_j h_{iℓ̄}| at the point (0 iff Kähler there)."""
    n = m.n
    dval = np.array(
        [[[m.h[j][l].deriv_value(*_unit(n, i, None)) for l in range(n)] for j in range(n)]
         for i in range(n)]
    )
    return float(np.max(np.abs(dval - dval.transpose(1, 0, 2))))


# -- background Riemannian scalar --------------------------------------------------


def _real_partials(j: WJet, n: int):
    """Value, gradient and Hessian of a jet in real coordinates (x^1..x^n, y^1..y^n)."""
    dirs = []
    for k in range(1, n + 1):
        dirs.append(lambda f, k=k: d_dz(f, k) + d_dzbar(f, k))  # ∂/∂x^k
    for k in range(1, n + 1):
        dirs.append(lambda f, k=k: 1j * d_dz(f, k) - 1j * d_dzbar(f, k))  # ∂/∂y^k
    first = [d(j) for d in dirs]
    grad = np.array([f.value for f in first])
    hess = np.array([[dirs[c](first[r]).value for c in range(2 * n)] for r in range(2 * n)])
    return j.value, grad, hess


def _real_blocks(M: np.ndarray) -> np.ndarray:
    """2n×2n real block matrix [[2Re M, 2Im M], [−2Im M, 2Re M]] for Hermitian M."""
    A = 2.0 * M.real
    B = 2.0 * M.imag
    return np.block([[A, B], [-B, A]])


def riemannian_scalar(m: MetricJet) -> float:
    """Scalar curvature of the background Riemannian metric.

    The real metric is fixed by g(∂/∂z^i, ∂/∂z̄^j) = h_{ij̄} under ℂ-bilinear
    extension, i.e. g_xx = g_yy = 2 Re h and g_xy = 2 Im h in coordinates
    z^i = x^i + √−1 y^i.  Scalar curvature comes from the standard formula
    s = g^{μν} R_{μν} with everything assembled from the jet data.
    """
    n = m.n
    _check_metric(m)
    d = 2 * n
    vals = np.empty((n, n), dtype=complex)
    grads = np.empty((d, n, n), dtype=complex)
    hesses = np.empty((d, d, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            v, g, hs = _real_partials(m.h[i][j], n)
            vals[i, j] = v
            grads[:, i, j] = g
            hesses[:, :, i, j] = hs

    Gv = _real_blocks(vals)
    Gd = np.array([_real_blocks(grads[c]) for c in range(d)])  # [c, a, b] = ∂_c g_ab
    Gdd = np.array(
        [[_real_blocks(hesses[c, e]) for e in range(d)] for c in range(d)]
    )  # [c, e, a, b] = ∂_c ∂_e g_ab

    Ginv = np.linalg.inv(Gv)
    dGinv = -np.einsum("la,cab,br->clr", Ginv, Gd, Ginv)

    # Γ^l_{mn} = ½ g^{lr} (∂_m g_rn + ∂_n g_rm − ∂_r g_mn)
    bracket = (
        np.einsum("mrn->rmn", Gd)
        + np.einsum("nrm->rmn", Gd)
        - np.einsum("rmn->rmn", Gd)
    )
    Gamma = 0.5 * np.einsum("lr,rmn->lmn", Ginv, bracket)

    dbracket = (
        np.einsum("cmrn->crmn", Gdd)
        + np.einsum("cnrm->crmn", Gdd)
        - np.einsum("crmn->crmn", Gdd)
    )
    dGamma = 0.5 * (
        np.einsum("clr,rmn->clmn", dGinv, bracket)
        + np.einsum("lr,crmn->clmn", Ginv, dbracket)
    )

    # R_{mn} = ∂_l Γ^l_{mn} − ∂_n Γ^l_{ml} + Γ^l_{lr} Γ^r_{mn} − Γ^l_{nr} Γ^r_{ml}
    ric = (
        np.einsum("llmn->mn", dGamma)
        - np.einsum("nlml->mn", dGamma)
        + np.einsum("llr,rmn->mn", Gamma, Gamma)
        - np.einsum("lnr,rml->mn", Gamma, Gamma)
    )
    return float(np.einsum("mn,mn->", Ginv, ric))
