"""Identity verification over point samples.

Each identity tag names one equation the engine can test pointwise; a check
draws a deterministic point sample, evaluates the residual at every point,
and aggregates into a report with a pass/fail verdict.

Identity tags
-------------
lc-ricci-flat     max |𝔯ic(ω)| via both computation paths (headline: zero for
                  the Δ³ω_{−1/2} Hopf metric)
key-relation      the two 𝔯ic paths agree: curvature trace vs Ric − ½(∂∂*ω+∂̄∂̄*ω)
conformal-law     𝔯ic(e^fω) = 𝔯ic(ω) − √−1∂∂̄f and ∂̄*_f ω_f = ∂̄*ω + √−1(n−1)∂f
det-formula       det(ω_λ) = (1+λ)/(Δ³Φ²)
tw-formula        ∂∂*ω_λ = ∂̄∂̄*ω_λ = √−1∂∂̄logΦ/(1+λ), and
                  ∂*ω_λ = (√−1/(1+λ))∂̄logΦ componentwise
scalar-010        s_LC = s_C − ½⟨∂∂*ω + ∂̄∂̄*ω, ω⟩
scalar-key1       s = 2s_C + (⟨∂∂*ω + ∂̄∂̄*ω, ω⟩ − 2|∂*ω|²) − ½|T|²
deck-invariance   J h(az,bw) J† = h(z,w) for J = diag(a,b)
hessian-matrices  closed forms of √−1∂∂̄logΦ and √−1∂Φ∧∂̄Φ against the solved
                  jet, plus their vanishing determinants
kahler-collapse   torsion, adjoint forms, and the Chern/Levi-Civita gap all
                  vanish on a Kähler metric; s = 2s_C and s_LC = s_C

Residuals for form identities are max-entry differences normalized by
1 + (max entry of the dominant term), making pass/fail scale-invariant.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import geometry as geo
from . import metrics as mz
from .wjet import Point, d_dz, d_dzbar, log, multi_indices, solve_scalar_root

SCHEMA_VERSION = "1"

IDENTITIES = (
    "lc-ricci-flat",
    "key-relation",
    "conformal-law",
    "det-formula",
    "tw-formula",
    "scalar-010",
    "scalar-key1",
    "deck-invariance",
    "hessian-matrices",
    "kahler-collapse",
)


class CheckAborted(RuntimeError):
    """Raised when too many sample points fail to construct (≥10%)."""


@dataclass(frozen=True)
class CheckSpec:
    identity: str
    metric: mz.MetricSpec
    n_points: int = 100
    seed: int = 0
    tol: float = 1e-8

    def __post_init__(self):
        if self.identity not in IDENTITIES:
            raise ValueError(
                f"unknown identity {self.identity!r}; expected one of {IDENTITIES}"
            )
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


@dataclass
class VerificationReport:
    check: CheckSpec
    per_point: list  # [(Point, residual)]
    failures: list  # [(Point, error message)]
    verdict: str
    max_residual: float
    mean_residual: float
    argmax_point: Point | None
    wall_time: float
    warning: str | None = None
    notes: dict = field(default_factory=dict)
    engine_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "engine_version": self.engine_version,
            "check": {
                "identity": self.check.identity,
                "metric": self.check.metric.canonical(),
                "n_points": self.check.n_points,
                "seed": self.check.seed,
                "tol": self.check.tol,
            },
            "per_point": [
                {"point": _point_json(p), "residual": r} for p, r in self.per_point
            ],
            "stats": {
                "max": self.max_residual,
                "mean": self.mean_residual,
                "argmax_point": _point_json(self.argmax_point)
                if self.argmax_point is not None
                else None,
            },
            "failures": [
                {"point": _point_json(p), "error": msg} for p, msg in self.failures
            ],
            "verdict": self.verdict,
            "warning": self.warning,
            "notes": self.notes,
            "wall_time": self.wall_time,
        }


def _point_json(p: Point) -> list:
    return [[float(c.real), float(c.imag)] for c in p.coords]


# -- sampling ------------------------------------------------------------------------


def sample_points(
    domain: str,
    n: int,
    seed: int,
    *,
    dim: int = 2,
    hp: mz.HopfParams | None = None,
    box_halfwidth: float = 1.2,
    origin_exclusion: float = 0.1,
) -> list[Point]:
    """Deterministic point sample in a box or a Hopf fundamental-domain shell.

    box: independent uniform real coordinates in [−w, w], redrawn while the
    point sits inside the origin-exclusion ball.

    hopf-fundamental: a uniform direction on the unit sphere of ℂ², with the
    radius solved so that Φ lands on a log-uniformly drawn target inside
    [1, |a||b|) (small relative margins keep clear of the shell boundary).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if domain == "box":
        pts = []
        while len(pts) < n:
            raw = rng.uniform(-box_halfwidth, box_halfwidth, size=2 * dim)
            coords = raw[:dim] + 1j * raw[dim:]
            if np.linalg.norm(coords) <= origin_exclusion:
                continue
            pts.append(Point(tuple(complex(c) for c in coords)))
        return pts
    if domain == "hopf-fundamental":
        if hp is None:
            raise ValueError("hopf-fundamental sampling needs HopfParams")
        lo, hi = 1.0, abs(hp.a) * abs(hp.b)
        margin = 1e-3 * (hi - lo)
        pts = []
        for _ in range(n):
            v = rng.standard_normal(4)
            v /= np.linalg.norm(v)
            direction = (complex(v[0], v[1]), complex(v[2], v[3]))
            target = math.exp(rng.uniform(math.log(lo + margin), math.log(hi - margin)))

            def f(rho, d=direction, t=target):
                q = (math.exp(rho) * d[0], math.exp(rho) * d[1])
                return mz.phi_value(q, hp) - t

            rho = solve_scalar_root(f, 0.0, 1e-12)
            r = math.exp(rho)
            pts.append(Point((r * direction[0], r * direction[1])))
        return pts
    raise ValueError(f"unknown sampling domain {domain!r}")


# -- finite-difference oracle -----------------------------------------------------------


def fd_jet(
    fn, p, n_vars: int, order: int = 2, step: float = 1e-5, step2: float = 1e-4
) -> np.ndarray:
    """Central-difference estimate of a function's jet coefficients at p.

    `fn` maps a coordinate tuple to a complex value.  Derivatives are taken in
    the 2·n_vars real coordinates and converted to Wirtinger coefficients via
    ∂_{z^k} = ½(∂_{x^k} − i∂_{y^k}), ∂_{z̄^k} = ½(∂_{x^k} + i∂_{y^k}); the
    result uses the same multi-index layout (and a!b! normalization) as WJet.

    First derivatives use `step`; second-derivative stencils use the larger
    `step2` because their roundoff floor scales like ε/h² — at h = 1e-5 that
    floor (≈2e-6 relative) would sit above the 1e-6 agreement target, while
    h = 1e-4 balances truncation against roundoff near the optimum ε^{1/4}.
    """
    pt = np.array(tuple(p), dtype=complex)
    nv = n_vars
    d = 2 * nv

    def shift(tvec):
        q = pt.copy()
        for k in range(nv):
            q[k] = q[k] + tvec[k] + 1j * tvec[nv + k]
        return fn(tuple(q))

    f0 = complex(shift(np.zeros(d)))
    grad = np.zeros(d, dtype=complex)
    if order >= 1:
        for a in range(d):
            e = np.zeros(d)
            e[a] = step
            grad[a] = (shift(e) - shift(-e)) / (2 * step)
    hess = np.zeros((d, d), dtype=complex)
    if order >= 2:
        for a in range(d):
            ea = np.zeros(d)
            ea[a] = step2
            hess[a, a] = (shift(ea) - 2 * f0 + shift(-ea)) / step2**2
            for b in range(a + 1, d):
                eb = np.zeros(d)
                eb[b] = step2
                mixed = (
                    shift(ea + eb) - shift(ea - eb) - shift(-ea + eb) + shift(-ea - eb)
                ) / (4 * step2**2)
                hess[a, b] = hess[b, a] = mixed

    # complex direction vectors: columns are real-coordinate weights
    dirs = np.zeros((2 * nv, d), dtype=complex)  # row = formal variable slot
    for k in range(nv):
        dirs[k, k] = 0.5
        dirs[k, nv + k] = -0.5j  # ∂_{z^k}
        dirs[nv + k, k] = 0.5
        dirs[nv + k, nv + k] = 0.5j  # ∂_{z̄^k}

    mts = multi_indices(nv)
    out = np.zeros(len(mts), dtype=complex)
    for idx, m in enumerate(mts):
        deg = sum(m)
        if deg == 0:
            out[idx] = f0
        elif deg == 1 and order >= 1:
            slot = m.index(1)
            out[idx] = dirs[slot] @ grad
        elif deg == 2 and order >= 2:
            slots = [s for s, e in enumerate(m) for _ in range(e)]
            u, v = slots
            val = dirs[u] @ hess @ dirs[v]
            out[idx] = val / (2.0 if u == v else 1.0)
    return out


def fd_oracle(spec: mz.MetricSpec, p, order: int = 2) -> dict:
    """FD jet-coefficient table for every metric entry, keyed by (i, j)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    n = spec.dim

    def entry_fn(i, j):
        return lambda q: mz.build_metric(spec, q).h[i][j].value

    return {
        (i, j): fd_jet(entry_fn(i, j), p, n, order=order)
        for i in range(n)
        for j in range(n)
    }


# -- per-identity residuals ----------------------------------------------------------


def _norm(diff: float, *scales: float) -> float:
    return float(diff) / (1.0 + max(scales, default=0.0))


def _maxabs(arr) -> float:
    return float(np.max(np.abs(arr)))


def _residual_lc_ricci_flat(spec: mz.MetricSpec, p) -> float:
    m = mz.build_metric(spec, p)
    r1 = geo.lc_ricci(m).A
    r2 = geo.lc_ricci_via_relation(m).A
    ric = geo.chern_ricci(m).A
    return _norm(max(_maxabs(r1), _maxabs(r2)), _maxabs(ric))


def _residual_key_relation(spec: mz.MetricSpec, p) -> float:
    m = mz.build_metric(spec, p)
    r1 = geo.lc_ricci(m).A
    r2 = geo.lc_ricci_via_relation(m).A
    return _norm(_maxabs(r1 - r2), _maxabs(r1), _maxabs(r2))


def _residual_conformal_law(spec: mz.MetricSpec, p) -> float:
    if spec.kind != "conformal":
        raise ValueError("conformal-law requires a conformal metric spec")
    n = spec.dim
    mb = mz.build_metric(spec.base, p)
    mc = mz.build_metric(spec, p)
    fj = mz.field_jet(spec.f, p, spec.hopf_params(), n=n)

    ddbar_f = np.array(
        [
            [fj.deriv_value(_unit(n, i), _unit(n, j)) for j in range(n)]
            for i in range(n)
        ]
    )
    lhs = geo.lc_ricci(mc).A
    rhs = geo.lc_ricci(mb).A - ddbar_f
    r_ric = _norm(_maxabs(lhs - rhs), _maxabs(lhs), _maxabs(rhs))

    _, a10_b = geo.del_star(mb)
    _, a10_c = geo.del_star(mc)
    df = np.array([d_dz(fj, i + 1).value for i in range(n)])
    want = a10_b.values + 1j * (n - 1) * df
    r_adj = _norm(_maxabs(a10_c.values - want), _maxabs(a10_c.values), _maxabs(want))
    return max(r_ric, r_adj)


def _unit(n, i):
    return tuple(1 if k == i else 0 for k in range(n))


def _residual_det_formula(spec: mz.MetricSpec, p) -> float:
    if spec.kind != "hopf-omega-lambda":
        raise ValueError("det-formula requires a hopf-omega-lambda metric spec")
    hp = spec.hopf_params()
    lam = spec.lam if spec.lam is not None else 0.0
    m = mz.build_metric(spec, p)
    Phi, _, Delta = mz.phi_field(p, hp)
    expect = (1.0 + lam) / (Delta.value.real**3 * Phi.value.real**2)
    det = complex(np.linalg.det(m.values()))
    return abs(det - expect) / abs(expect)


def _residual_tw_formula(spec: mz.MetricSpec, p) -> float:
    if spec.kind != "hopf-omega-lambda":
        raise ValueError("tw-formula requires a hopf-omega-lambda metric spec")
    hp = spec.hopf_params()
    lam = spec.lam if spec.lam is not None else 0.0
    m = mz.build_metric(spec, p)

    L, _ = mz.hessian_forms(p, hp)
    target = L.A / (1.0 + lam)
    p1, p2 = geo.d_del_star_parts(m)
    r1 = _norm(_maxabs(p1.A - target), _maxabs(target))
    r2 = _norm(_maxabs(p2.A - target), _maxabs(target))

    # ∂*ω_λ = (√−1/(1+λ)) ∂̄logΦ componentwise
    Phi, _, _ = mz.phi_field(p, hp)
    lp = log(Phi)
    grad_bar = np.array([d_dzbar(lp, i + 1).value for i in range(2)])
    want = 1j / (1.0 + lam) * grad_bar
    a01, _ = geo.del_star(m)
    r3 = _norm(_maxabs(a01.values - want), _maxabs(want))
    return max(r1, r2, r3)


def _residual_scalar_010(spec: mz.MetricSpec, p) -> float:
    m = mz.build_metric(spec, p)
    sc = geo.scalars(m)
    return abs(sc.s_LC - (sc.s_C - 0.5 * sc.ddstar_pairing)) / (1.0 + abs(sc.s_LC))


def _residual_scalar_key1(spec: mz.MetricSpec, p) -> float:
    m = mz.build_metric(spec, p)
    sc = geo.scalars(m)
    rhs = 2.0 * sc.s_C + (sc.ddstar_pairing - 2.0 * sc.delstar_sq) - 0.5 * sc.torsion_sq
    return abs(sc.s - rhs) / (1.0 + abs(sc.s))


def _residual_deck(spec: mz.MetricSpec, p) -> float:
    return mz.deck_invariance_residual(spec, p)


def _residual_hessian_matrices(spec: mz.MetricSpec, p, notes: dict) -> float:
    hp = spec.hopf_params()
    if hp is None:
        raise ValueError("hessian-matrices requires a spec with Hopf parameters")
    L, P = mz.hessian_forms(p, hp)
    Phi, _, _ = mz.phi_field(p, hp)
    lp = log(Phi)
    n = 2
    L_jet = np.array(
        [[lp.deriv_value(_unit(n, i), _unit(n, j)) for j in range(n)] for i in range(n)]
    )
    grad = np.array([Phi.deriv_value(_unit(n, i), (0, 0)) for i in range(n)])
    grad_b = np.array([Phi.deriv_value((0, 0), _unit(n, j)) for j in range(n)])
    P_jet = np.outer(grad, grad_b)
    rL = _norm(_maxabs(L.A - L_jet), _maxabs(L.A))
    rP = _norm(_maxabs(P.A - P_jet), _maxabs(P.A))
    rdet = max(abs(np.linalg.det(L.A)), abs(np.linalg.det(P.A)))
    # The displayed matrices read with rows/columns swapped match the transpose;
    # record how far the literal row-column reading sits from the computed tensor.
    lit = max(_maxabs(L.A - L.A.T), _maxabs(P.A - P.A.T))
    notes["display_transpose_gap"] = max(lit, notes.get("display_transpose_gap", 0.0))
    return max(rL, rP, rdet)


def _residual_kahler_collapse(spec: mz.MetricSpec, p) -> float:
    m = mz.build_metric(spec, p)
    hscale = _maxabs(m.values())
    defect = _norm(geo.kahler_defect(m), hscale)
    _, tsq = geo.torsion(m)
    a01, _ = geo.del_star(m)
    dd = geo.d_del_star(m)
    sc = geo.scalars(m)
    ric_gap = _norm(
        _maxabs(geo.lc_ricci(m).A - geo.chern_ricci(m).A),
        _maxabs(geo.chern_ricci(m).A),
    )
    return max(
        defect,
        abs(tsq),
        _maxabs(a01.values),
        dd.max_abs(),
        abs(sc.s - 2.0 * sc.s_C) / (1.0 + abs(sc.s)),
        abs(sc.s_LC - sc.s_C) / (1.0 + abs(sc.s_LC)),
        ric_gap,
    )


# -- orchestration ---------------------------------------------------------------------


def run_check(c: CheckSpec) -> VerificationReport:
    """Evaluate one identity over a deterministic point sample and aggregate."""
    t0 = time.perf_counter()
    hp = c.metric.hopf_params()
    if hp is not None and c.metric.dim == 2:
        points = sample_points("hopf-fundamental", c.n_points, c.seed, hp=hp)
    else:
        points = sample_points("box", c.n_points, c.seed, dim=c.metric.dim)

    notes: dict = {}
    per_point = []
    failures = []
    for p in points:
        try:
            if c.identity == "lc-ricci-flat":
                r = _residual_lc_ricci_flat(c.metric, p)
            elif c.identity == "key-relation":
                r = _residual_key_relation(c.metric, p)
            elif c.identity == "conformal-law":
                r = _residual_conformal_law(c.metric, p)
            elif c.identity == "det-formula":
                r = _residual_det_formula(c.metric, p)
            elif c.identity == "tw-formula":
                r = _residual_tw_formula(c.metric, p)
            elif c.identity == "scalar-010":
                r = _residual_scalar_010(c.metric, p)
            elif c.identity == "scalar-key1":
                r = _residual_scalar_key1(c.metric, p)
            elif c.identity == "deck-invariance":
                r = _residual_deck(c.metric, p)
            elif c.identity == "hessian-matrices":
                r = _residual_hessian_matrices(c.metric, p, notes)
            elif c.identity == "kahler-collapse":
                r = _residual_kahler_collapse(c.metric, p)
            else:  # pragma: no cover - CheckSpec validates
                raise ValueError(f"unknown identity {c.identity!r}")
        except ValueError as exc:
            if _is_config_error(exc):
                raise
            failures.append((p, str(exc)))
            continue
        per_point.append((p, float(r)))

    if failures and len(failures) / len(points) >= 0.1:
        raise CheckAborted(
            f"{len(failures)}/{len(points)} points failed to construct; "
            f"first error: {failures[0][1]}"
        )

    per_point.sort(key=lambda pr: tuple((c.real, c.imag) for c in pr[0].coords))
    residuals = [r for _, r in per_point]
    max_r = max(residuals) if residuals else float("nan")
    mean_r = float(np.mean(residuals)) if residuals else float("nan")
    argmax = per_point[int(np.argmax(residuals))][0] if residuals else None
    verdict = "pass" if residuals and max_r <= c.tol else "fail"
    warning = (
        f"{len(failures)} of {len(points)} points failed to construct"
        if failures
        else None
    )
    return VerificationReport(
        check=c,
        per_point=per_point,
        failures=failures,
        verdict=verdict,
        max_residual=max_r,
        mean_residual=mean_r,
        argmax_point=argmax,
        wall_time=time.perf_counter() - t0,
        warning=warning,
        notes=notes,
    )


_CONFIG_MARKERS = (
    "requires",
    "unknown identity",
    "needs Hopf parameters",
)


def _is_config_error(exc: Exception) -> bool:
    msg = str(exc)
    return any(marker in msg for marker in _CONFIG_MARKERS)
