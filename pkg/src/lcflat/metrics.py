"""Concrete metric fields on ℂ²∖{0} and reference metrics on ℂⁿ.

The centerpiece is the Hopf-surface family: the potential Φ solved implicitly
from  |z|²Φ^{−α} + |w|²Φ^{α−2} = 1,  the weight Δ = α|z|²Φ^{−α} + (2−α)|w|²Φ^{α−2},
the one-parameter metrics

    ω_λ = (1+λ) √−1 ∂∂̄ log Φ + √−1 ∂Φ∧∂̄Φ / Φ²      (λ > −1)

and the conformally rescaled metric Δ³·ω_{−1/2}, whose Levi-Civita Ricci form
vanishes identically — the headline identity this package verifies.

All metric entries are produced as full order-2 Wirtinger jets.  The first and
second derivatives of Φ admit closed forms in (z, w, Φ, Δ); building the metric
from those closed forms (rather than differentiating Φ's jet, which would drop
the truncation order) keeps every entry a genuine order-2 jet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Form11, MetricJet
from .wjet import (
    Point,
    WJet,
    conj,
    exp,
    implicit_solve,
    is_real_valued,
    jet_conj_var,
    jet_const,
    jet_var,
    pow_real,
    solve_scalar_root,
)

E = math.e


# -- parameter types ---------------------------------------------------------------


@dataclass(frozen=True)
class HopfParams:
    """Deck-transformation multipliers (z, w) ↦ (az, bw) with |a| ≥ |b| > 1."""

    a: complex
    b: complex

    def __post_init__(self):
        if not abs(self.a) >= abs(self.b) > 1:
            raise ValueError(
                f"need |a| >= |b| > 1, got |a|={abs(self.a):.6g}, |b|={abs(self.b):.6g}"
            )

    @property
    def k1(self) -> float:
        return math.log(abs(self.a))

    @property
    def k2(self) -> float:
        return math.log(abs(self.b))

    @property
    def alpha(self) -> float:
        """2k₁/(k₁+k₂) ∈ [1, 2)."""
        return 2.0 * self.k1 / (self.k1 + self.k2)


@dataclass(frozen=True)
class FieldSpec:
    """Scalar conformal factor: zero | poly{seed,amp} | log-phi | log-delta{scale}."""

    kind: str = "zero"
    seed: int = 0
    amp: float = 0.1
    scale: float = 1.0

    _KINDS = ("zero", "poly", "log-phi", "log-delta")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {self._KINDS}")


_METRIC_KINDS = (
    "flat",
    "kahler-test",
    "hopf-standard",
    "hopf-omega-lambda",
    "hopf-lc-flat",
    "conformal",
    "user-polynomial",
)

# keys each kind accepts in the textual spec grammar
_ALLOWED_KEYS = {
    "flat": {"a", "b", "n"},
    "kahler-test": {"n"},
    "hopf-standard": {"a", "b"},
    "hopf-omega-lambda": {"a", "b", "lambda"},
    "hopf-lc-flat": {"a", "b"},
    "conformal": {"base", "f"},
    "user-polynomial": {"seed", "amp", "n"},
}


@dataclass(frozen=True)
class MetricSpec:
    """Declarative metric description with a canonical text form `kind{key=value,...}`."""

    kind: str
    a: complex | None = None
    b: complex | None = None
    lam: float | None = None
    seed: int | None = None
    amp: float | None = None
    n: int | None = None
    base: "MetricSpec | None" = None
    f: FieldSpec | None = None

    def __post_init__(self):
        if self.kind not in _METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {_METRIC_KINDS}")
        if self.kind == "hopf-omega-lambda":
            lam = self.lam if self.lam is not None else 0.0
            if not lam > -1.0:
                raise ValueError(f"lambda must be > -1 for a positive metric, got {lam}")
        if self.kind == "conformal":
            if self.base is None or self.f is None:
                raise ValueError("conformal spec needs both base and f")
        if self.kind.startswith("hopf") and (self.a is not None or self.b is not None):
            self.hopf_params()  # validates |a| >= |b| > 1 eagerly

    @property
    def dim(self) -> int:
        if self.kind == "conformal":
            return self.base.dim
        if self.kind.startswith("hopf"):
            return 2
        return self.n if self.n is not None else 2

    def hopf_params(self) -> HopfParams | None:
        """HopfParams carried by this spec, searching through conformal bases."""
        if self.kind == "conformal":
            return self.base.hopf_params()
        if self.a is not None or self.b is not None:
            a = self.a if self.a is not None else E
            b = self.b if self.b is not None else E
            return HopfParams(a, b)
        if self.kind.startswith("hopf"):
            return HopfParams(E, E)
        return None

    # -- canonical text form ---------------------------------------------------

    def canonical(self) -> str:
        parts = []
        if self.a is not None:
            parts.append(f"a={_fmt_complex(self.a)}")
        if self.b is not None:
            parts.append(f"b={_fmt_complex(self.b)}")
        if self.lam is not None:
            parts.append(f"lambda={_fmt_float(self.lam)}")
        if self.seed is not None:
            parts.append(f"seed={self.seed}")
        if self.amp is not None:
            parts.append(f"amp={_fmt_float(self.amp)}")
        if self.n is not None:
            parts.append(f"n={self.n}")
        if self.base is not None:
            parts.append(f"base={self.base.canonical()}")
        if self.f is not None:
            parts.append(f"f={_fmt_field(self.f)}")
        return self.kind if not parts else f"{self.kind}{{{','.join(parts)}}}"


def _fmt_float(x: float) -> str:
    return repr(float(x))  # shortest exact round-trip form


def _fmt_complex(x: complex) -> str:
    x = complex(x)
    if x.imag == 0.0:
        return _fmt_float(x.real)
    return f"{_fmt_float(x.real)}{x.imag:+}j"


def _fmt_field(f: FieldSpec) -> str:
    if f.kind == "poly":
        return f"poly{{seed={f.seed},amp={_fmt_float(f.amp)}}}"
    if f.kind == "log-delta":
        return f"log-delta{{scale={_fmt_float(f.scale)}}}"
    return f.kind


def _split_top_level(body: str) -> list[str]:
    """Split on commas that sit at brace depth 0 (nested specs stay intact)."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced braces in {body!r}")
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced braces in {body!r}")
    if cur or parts:
        parts.append("".join(cur))
    return parts


def _split_kind_body(text: str) -> tuple[str, str | None]:
    text = text.strip()
    if "{" not in text:
        return text, None
    if not text.endswith("}"):
        raise ValueError(f"malformed spec {text!r}: expected closing brace")
    kind, body = text.split("{", 1)
    return kind.strip(), body[:-1]


def _parse_complex(key: str, raw: str) -> complex:
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise ValueError(f"field {key!r}: cannot parse {raw!r} as a complex number") from None


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"field {key!r}: cannot parse {raw!r} as a real number") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"field {key!r}: cannot parse {raw!r} as an integer") from None


def parse_field_spec(text: str) -> FieldSpec:
    kind, body = _split_kind_body(text)
    kwargs = {}
    for item in _split_top_level(body) if body else []:
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"field spec item {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key == "seed":
            kwargs["seed"] = _parse_int(key, raw)
        elif key == "amp":
            kwargs["amp"] = _parse_float(key, raw)
        elif key == "scale":
            kwargs["scale"] = _parse_float(key, raw)
        else:
            raise ValueError(f"field {key!r} is not valid for a scalar-field spec")
    return FieldSpec(kind=kind, **kwargs)


def parse_metric_spec(text: str) -> MetricSpec:
    """Parse the `kind{key=value,...}` grammar (values may nest the same grammar)."""
    kind, body = _split_kind_body(text)
    if kind not in _METRIC_KINDS:
        raise ValueError(f"unknown metric kind {kind!r}; expected one of {_METRIC_KINDS}")
    allowed = _ALLOWED_KEYS[kind]
    kwargs = {}
    for item in _split_top_level(body) if body else []:
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"spec item {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in allowed:
            raise ValueError(f"field {key!r} is not valid for metric kind {kind!r}")
        if key in ("a", "b"):
            kwargs[key] = _parse_complex(key, raw)
        elif key == "lambda":
            kwargs["lam"] = _parse_float(key, raw)
        elif key == "seed":
            kwargs["seed"] = _parse_int(key, raw)
        elif key == "amp":
            kwargs["amp"] = _parse_float(key, raw)
        elif key == "n":
            kwargs["n"] = _parse_int(key, raw)
        elif key == "base":
            kwargs["base"] = parse_metric_spec(raw)
        elif key == "f":
            kwargs["f"] = parse_field_spec(raw)
    return MetricSpec(kind=kind, **kwargs)


# -- the Hopf potential -------------------------------------------------------------


def _coordinate_jets(p: Point | tuple, n: int):
    pt = tuple(p)
    zs = [jet_var(i + 1, pt[i], n) for i in range(n)]
    zbs = [jet_conj_var(i + 1, np.conj(pt[i]), n) for i in range(n)]
    return zs, zbs


def phi_value(p, hp: HopfParams, tol: float = 1e-13) -> float:
    """Scalar Φ(p) without jet overhead (used by the domain samplers)."""
    z, w = complex(p[0]), complex(p[1])
    zz, ww = abs(z) ** 2, abs(w) ** 2
    if zz + ww == 0.0:
        raise ValueError("Φ is undefined at the origin")
    c1, c2 = hp.k1 / math.pi, hp.k2 / math.pi

    def f(theta: float) -> float:
        return zz * math.exp(-c1 * theta) + ww * math.exp(-c2 * theta) - 1.0

    theta = solve_scalar_root(f, 0.0, tol)
    return math.exp((hp.k1 + hp.k2) * theta / (2.0 * math.pi))


def phi_field(p, hp: HopfParams, tol: float = 1e-13):
    """Order-2 jets of (Φ, θ, Δ) at p ≠ 0.

    θ is the implicit solution of |z|² e^{−k₁θ/π} + |w|² e^{−k₂θ/π} = 1 (the
    left side is strictly decreasing in θ, so the root is unique), and
    Φ = e^{(k₁+k₂)θ/(2π)},  Δ = α|z|²Φ^{−α} + (2−α)|w|²Φ^{α−2}.
    """
    pt = tuple(p)
    if abs(pt[0]) ** 2 + abs(pt[1]) ** 2 == 0.0:
        raise ValueError("Φ is undefined at the origin")
    (z, w), (zb, wb) = _coordinate_jets(pt, 2)
    zz = z * zb
    ww = w * wb
    c1, c2 = hp.k1 / math.pi, hp.k2 / math.pi

    def F(theta: WJet) -> WJet:
        return zz * exp(-c1 * theta) + ww * exp(-c2 * theta) - 1.0

    theta = implicit_solve(F, 0.0, tol, n_vars=2)
    Phi = exp((hp.k1 + hp.k2) / (2.0 * math.pi) * theta)
    al = hp.alpha
    u = zz * pow_real(Phi, -al)
    v = ww * pow_real(Phi, al - 2.0)
    Delta = al * u + (2.0 - al) * v
    return Phi, theta, Delta


def _hopf_frame(p, hp: HopfParams):
    """Shared jet ingredients for the closed-form Hopf metric entries."""
    (z, w), (zb, wb) = _coordinate_jets(p, 2)
    Phi, theta, Delta = phi_field(p, hp)
    al = hp.alpha
    inv_phi2 = pow_real(Phi, -2.0)
    inv_d2 = 1.0 / (Delta * Delta)
    inv_d3 = inv_d2 / Delta
    return {
        "z": z, "w": w, "zb": zb, "wb": wb,
        "Phi": Phi, "theta": theta, "Delta": Delta, "alpha": al,
        "inv_phi2": inv_phi2, "inv_d2": inv_d2, "inv_d3": inv_d3,
    }


def log_phi_hessian_jets(p, hp: HopfParams, frame=None) -> list[list[WJet]]:
    """Order-2 jets of L_{ij̄} = ∂² log Φ / ∂z^i ∂z̄^j in closed form.

    Eliminating θ from the implicit relation gives, with α = 2k₁/(k₁+k₂),

        L = (1/(Φ²Δ³)) [[ (α−2)²|w|²,  α(α−2) z̄w ],
                         [ α(α−2) zw̄,   α²|z|²    ]]

    (rank 1, so det L = 0 identically).
    """
    fr = frame or _hopf_frame(p, hp)
    al, k = fr["alpha"], fr["inv_phi2"] * fr["inv_d3"]
    z, w, zb, wb = fr["z"], fr["w"], fr["zb"], fr["wb"]
    return [
        [((al - 2.0) ** 2) * (w * wb) * k, al * (al - 2.0) * (zb * w) * k],
        [al * (al - 2.0) * (z * wb) * k, (al**2) * (z * zb) * k],
    ]


def grad_phi_outer_jets(p, hp: HopfParams, frame=None) -> list[list[WJet]]:
    """Order-2 jets of P_{ij̄} = Φ_i Φ_j̄ (entries of √−1 ∂Φ∧∂̄Φ).

    The gradient has the closed form Φ_z = z̄ Φ^{1−α}/Δ, Φ_w = w̄ Φ^{α−1}/Δ, so

        P = (1/Δ²) [[ |z|² Φ^{2−2α},  z̄w ],
                    [ zw̄,            |w|² Φ^{2α−2} ]]

    (also rank 1: det P = 0).
    """
    fr = frame or _hopf_frame(p, hp)
    al = fr["alpha"]
    z, w, zb, wb = fr["z"], fr["w"], fr["zb"], fr["wb"]
    inv_d2 = fr["inv_d2"]
    p11 = (z * zb) * pow_real(fr["Phi"], 2.0 - 2.0 * al) * inv_d2
    p22 = (w * wb) * pow_real(fr["Phi"], 2.0 * al - 2.0) * inv_d2
    p12 = (zb * w) * inv_d2
    p21 = (z * wb) * inv_d2
    return [[p11, p12], [p21, p22]]


def grad_phi_jets(p, hp: HopfParams, frame=None) -> tuple[list[WJet], list[WJet]]:
    """Closed-form order-2 jets of (Φ_z, Φ_w) and (Φ_z̄, Φ_w̄)."""
    fr = frame or _hopf_frame(p, hp)
    al = fr["alpha"]
    S = pow_real(fr["Phi"], 1.0 - al) / fr["Delta"]
    T = pow_real(fr["Phi"], al - 1.0) / fr["Delta"]
    holo = [fr["zb"] * S, fr["wb"] * T]
    anti = [fr["z"] * S, fr["w"] * T]
    return holo, anti


def hessian_forms(p, hp: HopfParams) -> tuple[Form11, Form11]:
    """Value matrices of √−1∂∂̄logΦ and √−1∂Φ∧∂̄Φ (both singular, PSD)."""
    fr = _hopf_frame(p, hp)
    L = log_phi_hessian_jets(p, hp, fr)
    P = grad_phi_outer_jets(p, hp, fr)
    to_vals = lambda M: np.array([[M[i][j].value for j in range(2)] for i in range(2)])
    return Form11(to_vals(L)), Form11(to_vals(P))


# -- metric construction ---------------------------------------------------------------


def _flat_jets(n: int) -> list[list[WJet]]:
    return [[jet_const(1.0 if i == j else 0.0, n) for j in range(n)] for i in range(n)]


def _kahler_test_jets(p, n: int) -> list[list[WJet]]:
    zs, zbs = _coordinate_jets(p, n)
    h = _flat_jets(n)
    for i in range(n):
        for j in range(n):
            h[i][j] = h[i][j] + zs[i] * zbs[j]
    return h


def _hopf_standard_jets(p) -> list[list[WJet]]:
    zs, zbs = _coordinate_jets(p, 2)
    S = zs[0] * zbs[0] + zs[1] * zbs[1]
    inv = 1.0 / S
    zero = jet_const(0.0, 2)
    return [[inv, zero], [zero, inv]]


def _omega_lambda_jets(p, hp: HopfParams, lam: float) -> list[list[WJet]]:
    fr = _hopf_frame(p, hp)
    L = log_phi_hessian_jets(p, hp, fr)
    P = grad_phi_outer_jets(p, hp, fr)
    return [
        [(1.0 + lam) * L[i][j] + P[i][j] * fr["inv_phi2"] for j in range(2)]
        for i in range(2)
    ]


def _lc_flat_jets(p, hp: HopfParams) -> list[list[WJet]]:
    fr = _hopf_frame(p, hp)
    L = log_phi_hessian_jets(p, hp, fr)
    P = grad_phi_outer_jets(p, hp, fr)
    D = fr["Delta"]
    D3 = D * D * D
    return [
        [D3 * (0.5 * L[i][j] + P[i][j] * fr["inv_phi2"]) for j in range(2)]
        for i in range(2)
    ]


def random_polynomial_jets(p, n: int, seed: int, amp: float = 0.05) -> list[list[WJet]]:
    """Seeded Hermitian perturbation of the flat metric by degree-≤2 polynomials."""
    rng = np.random.default_rng(seed)
    zs, zbs = _coordinate_jets(p, n)
    h = _flat_jets(n)
    for i in range(n):
        for j in range(i, n):
            c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            q = (
                c[0] * zs[i] * zbs[j]
                + c[1] * zs[0] * zs[n - 1]
                + c[2] * zbs[0] * zbs[n - 1]
                + c[3] * zs[i]
                + c[4] * zbs[j]
                + c[5] * zs[0] * zbs[0]
            )
            if i == j:
                h[i][j] = h[i][j] + amp * (q + conj(q))
            else:
                h[i][j] = h[i][j] + amp * q
    for i in range(n):
        for j in range(i):
            h[i][j] = conj(h[j][i])
    return h


def field_jet(f: FieldSpec, p, hp: HopfParams | None, n: int = 2) -> WJet:
    """Real-valued order-2 jet of a scalar conformal factor."""
    if f.kind == "zero":
        return jet_const(0.0, n)
    if f.kind == "poly":
        rng = np.random.default_rng(f.seed)
        zs, zbs = _coordinate_jets(p, n)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        q = jet_const(0.0, n)
        for i in range(n):
            q = q + c[i] * zs[i] + c[n + i] * zs[i] * zbs[(i + 1) % n]
        q = q + c[2 * n] * zs[0] * zs[n - 1] + c[2 * n + 1] * zs[0] * zbs[0]
        return f.amp * (q + conj(q))
    if f.kind == "log-phi":
        if hp is None:
            raise ValueError("log-phi field needs Hopf parameters")
        from .wjet import log as jet_log

        Phi, _, _ = phi_field(p, hp)
        return jet_log(Phi)
    if f.kind == "log-delta":
        if hp is None:
            raise ValueError("log-delta field needs Hopf parameters")
        from .wjet import log as jet_log

        _, _, Delta = phi_field(p, hp)
        return f.scale * jet_log(Delta)
    raise ValueError(f"unknown field kind {f.kind!r}")


def conformal_scale(base: MetricJet, f: WJet) -> MetricJet:
    """Entrywise e^f · h for a real-valued scalar jet f."""
    if not is_real_valued(f):
        raise ValueError("conformal factor must be a real-valued jet")
    ef = exp(f)
    n = base.n
    return MetricJet(
        n=n,
        h=[[ef * base.h[i][j] for j in range(n)] for i in range(n)],
        point=base.point,
    )


def build_metric(spec: MetricSpec, p) -> MetricJet:
    """Realize a MetricSpec as an order-2 metric jet at the point p."""
    pt = Point(tuple(complex(c) for c in tuple(p)))
    n = spec.dim
    if len(pt.coords) != n:
        raise ValueError(f"point has {len(pt.coords)} coordinates, metric expects {n}")

    if spec.kind == "flat":
        h = _flat_jets(n)
    elif spec.kind == "kahler-test":
        h = _kahler_test_jets(pt, n)
    elif spec.kind == "hopf-standard":
        h = _hopf_standard_jets(pt)
    elif spec.kind == "hopf-omega-lambda":
        lam = spec.lam if spec.lam is not None else 0.0
        h = _omega_lambda_jets(pt, spec.hopf_params(), lam)
    elif spec.kind == "hopf-lc-flat":
        h = _lc_flat_jets(pt, spec.hopf_params())
    elif spec.kind == "conformal":
        base = build_metric(spec.base, pt)
        fj = field_jet(spec.f, pt, spec.hopf_params(), n=base.n)
        return conformal_scale(base, fj)
    elif spec.kind == "user-polynomial":
        h = random_polynomial_jets(
            pt, n, seed=spec.seed if spec.seed is not None else 0,
            amp=spec.amp if spec.amp is not None else 0.05,
        )
        vals = np.array([[h[i][j].value for j in range(n)] for i in range(n)])
        if np.linalg.eigvalsh(vals).min() <= 0:
            raise ValueError(
                f"user polynomial metric (seed={spec.seed}) is not positive definite at {tuple(pt)}"
            )
    else:  # pragma: no cover - guarded by MetricSpec validation
        raise ValueError(f"unknown metric kind {spec.kind!r}")

    return MetricJet(n=n, h=h, point=pt)


# -- deck invariance ---------------------------------------------------------------


def deck_invariance_residual(spec: MetricSpec, p, hp: HopfParams | None = None) -> float:
    """Max-entry residual of the deck-pullback equation J h(az, bw) J† = h(z, w).

    J = diag(a, b) is the Jacobian of the deck map, so the pullback of the
    metric tensor at (az, bw) has matrix J h(az,bw) J†; a metric descends to
    the quotient surface exactly when this equals h(z, w).  Works for any
    2-dimensional metric so that non-invariant ones (e.g. flat) can serve as
    negative controls; the deck parameters come from the MetricSpec unless
    passed explicitly.
    """
    hp = hp or spec.hopf_params()
    if hp is None:
        raise ValueError("deck test needs Hopf parameters (a, b) on the MetricSpec or passed in")
    if spec.dim != 2:
        raise ValueError("deck transformation acts on two complex coordinates")
    pt = tuple(complex(c) for c in tuple(p))
    image = (hp.a * pt[0], hp.b * pt[1])
    h_here = build_metric(spec, pt).values()
    h_image = build_metric(spec, image).values()
    J = np.diag([hp.a, hp.b])
    return float(np.max(np.abs(J @ h_image @ J.conj().T - h_here)))
