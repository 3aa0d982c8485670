"""Sparse polynomial symbols P(xi) and the structural checks on them.

A symbol enters the propagation / kernel pipeline only after passing
check_H1 (positivity + ellipticity of the principal part) and check_H2
(non-degenerate Hessian of the principal part).  The remaining operations
probe finer structure: growth of det Hess sqrt(P), the contact order of
the graph of sqrt(P), and the large-s inverse of P along rays.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fitting import DecayFit, fit_power_law


class SymbolError(ValueError):
    """Invalid symbol input (zero polynomial, bad dimension, bad literal)."""


class RadialInverseError(RuntimeError):
    """Newton/bisection failure or precondition violation in radial_inverse."""

    def __init__(self, message, s=None, omega=None):
        super().__init__(message)
        self.s = s
        self.omega = omega


# ---------------------------------------------------------------------------
# SymbolPoly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolPoly:
    """Sparse real polynomial on R^n, stored as (exponent-tuple, coefficient) terms.

    Canonical form: coefficients are nonzero and terms are sorted by
    (total degree, exponents).  Instances are immutable and hashable, so
    derivative/Hessian computations can be cached.
    """

    n: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise SymbolError(f"dimension must be a positive integer, got {self.n!r}")
        for alpha, c in self.terms:
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise SymbolError(f"bad exponent tuple {alpha!r} for dimension {self.n}")
            if c == 0.0:
                raise SymbolError("canonical form must not contain zero coefficients")

    @classmethod
    def from_terms(cls, n, mapping) -> "SymbolPoly":
        clean = {}
        for alpha, c in dict(mapping).items():
            alpha = tuple(int(a) for a in alpha)
            c = float(c)
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        terms = tuple(sorted(
            ((a, c) for a, c in clean.items() if c != 0.0),
            key=lambda t: (sum(t[0]), t[0]),
        ))
        return cls(n=n, terms=terms)

    @classmethod
    def constant(cls, n, c) -> "SymbolPoly":
        return cls.from_terms(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, n, alpha, c=1.0) -> "SymbolPoly":
        return cls.from_terms(n, {tuple(alpha): c})

    @classmethod
    def radial_power(cls, n, k) -> "SymbolPoly":
        """|xi|^k for even k, expanded as a polynomial."""
        if k % 2 != 0 or k < 0:
            raise SymbolError(f"|xi|^k is polynomial only for even k >= 0, got {k}")
        r2 = cls.from_terms(n, {tuple(2 if j == i else 0 for j in range(n)): 1.0
                                for i in range(n)})
        return r2 ** (k // 2)

    # -- basic queries -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def order(self) -> int:
        """Total degree m (0 for the zero polynomial)."""
        return max((sum(a) for a, _ in self.terms), default=0)

    def coeff(self, alpha) -> float:
        alpha = tuple(alpha)
        for a, c in self.terms:
            if a == alpha:
                return c
        return 0.0

    def as_dict(self) -> dict:
        return {a: c for a, c in self.terms}

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other, self.n)
        out = dict(self.terms)
        for a, c in other.terms:
            out[a] = out.get(a, 0.0) + c
        return SymbolPoly.from_terms(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return SymbolPoly.from_terms(self.n, {a: -c for a, c in self.terms})

    def __sub__(self, other):
        return self + (-_coerce(other, self.n))

    def __rsub__(self, other):
        return _coerce(other, self.n) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return SymbolPoly.from_terms(self.n, {a: c * other for a, c in self.terms})
        other = _coerce(other, self.n)
        out = {}
        for a1, c1 in self.terms:
            for a2, c2 in other.terms:
                key = tuple(x + y for x, y in zip(a1, a2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return SymbolPoly.from_terms(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise SymbolError("only nonnegative integer powers are defined")
        out = SymbolPoly.constant(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, xi):
        """Evaluate at one point (length-n) or a batch with shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.n:
            raise SymbolError(f"point dimension {xi.shape[-1]} != symbol dimension {self.n}")
        out = np.zeros(xi.shape[:-1], dtype=float)
        for alpha, c in self.terms:
            term = np.full(xi.shape[:-1], c, dtype=float)
            for i, a in enumerate(alpha):
                if a:
                    term = term * xi[..., i] ** a
            out += term
        if out.shape == ():
            return float(out)
        return out

    def evaluate_on_axes(self, axes):
        """Evaluate on the tensor lattice spanned by the 1-d arrays in axes.

        axes[i] varies along output dimension i; the result has shape
        (len(axes[0]), ..., len(axes[n-1])).
        """
        if len(axes) != self.n:
            raise SymbolError("need one axis per dimension")
        shaped = []
        for i, ax in enumerate(axes):
            ax = np.asarray(ax, dtype=float)
            shape = [1] * self.n
            shape[i] = ax.size
            shaped.append(ax.reshape(shape))
        out = np.zeros(tuple(ax.size for ax in map(np.asarray, axes)), dtype=float)
        for alpha, c in self.terms:
            term = c
            for i, a in enumerate(alpha):
                if a:
                    term = term * shaped[i] ** a
            out += term
        return out

    def __str__(self):
        return to_literal(self)


def _coerce(value, n) -> SymbolPoly:
    if isinstance(value, SymbolPoly):
        if value.n != n:
            raise SymbolError("dimension mismatch")
        return value
    if isinstance(value, (int, float)):
        return SymbolPoly.constant(n, value)
    raise SymbolError(f"cannot interpret {value!r} as a symbol")


# ---------------------------------------------------------------------------
# Literal format:  sum of terms "c * x1^a1 * ... * xn^an", with the
# shorthand |x|^k (k even).  The canonical printer always writes explicit
# coefficients and '*' separators, so parse(to_literal(p), p.n) == p.
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    \s*(?:
        (?P<norm>\|x\|\^(?P<nk>\d+))
      | (?P<var>x(?P<vi>\d+)(?:\^(?P<ve>\d+))?)
      | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<op>[+\-*])
    )""", re.VERBOSE)


def parse_symbol(text, n) -> SymbolPoly:
    """Parse the textual symbol format into a SymbolPoly of dimension n."""
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise SymbolError(f"cannot tokenize symbol literal near {text[pos:]!r}")
        tokens.append(m)
        pos = m.end()

    result = SymbolPoly.from_terms(n, {})
    term_factors = []
    term_sign = 1.0
    saw_factor = False
    flushed_any = False

    def flush():
        nonlocal term_factors, saw_factor, flushed_any
        if not saw_factor:
            raise SymbolError("empty term in symbol literal")
        term = SymbolPoly.constant(n, term_sign)
        for f in term_factors:
            term = term * f
        term_factors = []
        saw_factor = False
        flushed_any = True
        return term

    for tok in tokens:
        if tok.lastgroup is None:
            continue
        if tok.group("op"):
            op = tok.group("op")
            if op == "*":
                continue
            if saw_factor:
                result = result + flush()
                term_sign = 1.0 if op == "+" else -1.0
            else:
                term_sign *= 1.0 if op == "+" else -1.0
            continue
        if tok.group("num"):
            term_factors.append(SymbolPoly.constant(n, float(tok.group("num"))))
        elif tok.group("norm"):
            k = int(tok.group("nk"))
            term_factors.append(SymbolPoly.radial_power(n, k))
        elif tok.group("var"):
            i = int(tok.group("vi"))
            if not 1 <= i <= n:
                raise SymbolError(f"variable x{i} out of range for dimension {n}")
            e = int(tok.group("ve") or 1)
            alpha = tuple(e if j == i - 1 else 0 for j in range(n))
            term_factors.append(SymbolPoly.monomial(n, alpha))
        saw_factor = True
    if saw_factor:
        result = result + flush()
    if not flushed_any:
        raise SymbolError("symbol literal contains no terms")
    return result


def to_literal(p: SymbolPoly) -> str:
    """Canonical text form; round-trips through parse_symbol."""
    if p.is_zero:
        return "0"
    parts = []
    for alpha, c in p.terms:
        factors = [repr(abs(c))]
        for i, a in enumerate(alpha):
            if a == 1:
                factors.append(f"x{i + 1}")
            elif a > 1:
                factors.append(f"x{i + 1}^{a}")
        body = " * ".join(factors)
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Exact differentiation
# ---------------------------------------------------------------------------

def derivative(p: SymbolPoly, alpha) -> SymbolPoly:
    """Exact partial derivative d^alpha p (integer combinatorics on exponents)."""
    return _derivative_cached(p, tuple(int(a) for a in alpha))


@lru_cache(maxsize=4096)
def _derivative_cached(p: SymbolPoly, alpha: tuple) -> SymbolPoly:
    if len(alpha) != p.n:
        raise SymbolError("multi-index length must equal the dimension")
    out = {}
    for beta, c in p.terms:
        if any(b < a for b, a in zip(beta, alpha)):
            continue
        factor = 1
        for b, a in zip(beta, alpha):
            for j in range(a):
                factor *= b - j
        key = tuple(b - a for b, a in zip(beta, alpha))
        out[key] = out.get(key, 0.0) + c * factor
    return SymbolPoly.from_terms(p.n, out)


def principal_part(p: SymbolPoly) -> SymbolPoly:
    """Terms of total degree exactly p.order."""
    if p.is_zero:
        raise SymbolError("the zero polynomial has no principal part")
    m = p.order
    return SymbolPoly.from_terms(p.n, {a: c for a, c in p.terms if sum(a) == m})


@lru_cache(maxsize=512)
def gradient_polys(p: SymbolPoly) -> tuple:
    units = np.eye(p.n, dtype=int)
    return tuple(derivative(p, tuple(units[i])) for i in range(p.n))


@lru_cache(maxsize=512)
def hessian_polys(p: SymbolPoly) -> tuple:
    out = []
    for i in range(p.n):
        row = []
        for j in range(p.n):
            alpha = [0] * p.n
            alpha[i] += 1
            alpha[j] += 1
            row.append(derivative(p, tuple(alpha)))
        out.append(tuple(row))
    return tuple(out)


def hessian_det_values(p: SymbolPoly, points) -> np.ndarray:
    """det Hess p at a batch of points, shape (M, n) -> (M,)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    hp = hessian_polys(p)
    M = points.shape[0]
    H = np.empty((M, p.n, p.n), dtype=float)
    for i in range(p.n):
        for j in range(p.n):
            H[:, i, j] = hp[i][j].evaluate(points)
    return np.linalg.det(H)


def sqrt_hessian_det_values(p: SymbolPoly, points) -> np.ndarray:
    """det Hess sqrt(p) at points where p > 0.

    Uses the closed-form second derivatives of sqrt(p),
    (2 p p_ij - p_i p_j) / (4 p^{3/2}), built from exact derivatives of p.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M = points.shape[0]
    vals = p.evaluate(points)
    vals = np.atleast_1d(vals)
    if np.any(vals <= 0):
        bad = points[int(np.argmin(vals))]
        raise SymbolError(f"sqrt(P) derivatives need P > 0; P({tuple(bad)}) <= 0")
    gp = gradient_polys(p)
    hp = hessian_polys(p)
    grads = np.stack([g.evaluate(points) for g in gp], axis=-1)  # (M, n)
    H = np.empty((M, p.n, p.n), dtype=float)
    for i in range(p.n):
        for j in range(p.n):
            pij = hp[i][j].evaluate(points)
            H[:, i, j] = (2.0 * vals * pij - grads[:, i] * grads[:, j]) / (4.0 * vals**1.5)
    return np.linalg.det(H)


# ---------------------------------------------------------------------------
# Sphere sampling
# ---------------------------------------------------------------------------

def sphere_directions(n, count=None, seed=0) -> np.ndarray:
    """Deterministic unit-vector probe of S^{n-1}, shape (count, n).

    n=2: uniform angles (includes the axes and diagonals for count % 8 == 0);
    n=3: Fibonacci lattice; n>3: Sobol points pushed through the normal map.
    """
    if n < 1:
        raise SymbolError("dimension must be >= 1")
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if count is None:
        count = 4096 if n == 2 else (8192 if n == 3 else 2**16)
    if n == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        golden = np.pi * (3.0 - np.sqrt(5.0))
        phi = golden * i
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.stats import qmc
    from scipy.special import ndtri

    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    u = sob.random(count)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = ndtri(u)
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return g / norms[:, None]


@dataclass(frozen=True)
class SamplingConfig:
    """Probe sizes and tolerances for the hypothesis checks.

    ball_radii, when given, is the explicit radial probe set for the
    positivity check; otherwise radial_count equispaced radii from 0 to
    ball_radius are used (the origin is always probed).
    """

    sphere_count: int | None = None
    ball_radius: float = 4.0
    ball_dir_count: int = 256
    radial_count: int = 17
    ball_radii: tuple | None = None
    seed: int = 0
    positivity_rtol: float = 1e-12
    nondegeneracy_rtol: float = 1e-8  # relative floor for |det Hess P_m| on the sphere
    max_witnesses: int = 4

    def directions(self, n):
        return sphere_directions(n, self.sphere_count, self.seed)

    def radii(self):
        if self.ball_radii is not None:
            return np.asarray(self.ball_radii, dtype=float)
        return np.linspace(0.0, self.ball_radius, self.radial_count)


# ---------------------------------------------------------------------------
# Hypothesis reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """A probe point together with the quantity that violated a check there.

    point is None for structural violations (wrong order/dimension) that
    have no associated location.
    """

    kind: str
    point: tuple | None
    value: float
    detail: str


@dataclass(frozen=True)
class HypothesisReport:
    name: str
    passed: bool
    witnesses: tuple
    sampled_min: float | None
    sampled_max: float | None
    description: str
    flags: tuple = ()

    def __post_init__(self):
        if not self.passed and not self.witnesses:
            raise SymbolError("a failing report must carry at least one witness")


def check_H1(p: SymbolPoly, cfg: SamplingConfig | None = None) -> HypothesisReport:
    """Structural check: even order >= 4, n >= 2, elliptic principal part, P > 0.

    Ellipticity is probed on sphere directions; positivity on a compact
    ball including the origin.  Failures carry reproducible witnesses.
    """
    cfg = cfg or SamplingConfig()
    if p.is_zero:
        raise SymbolError("check_H1: zero polynomial is not a valid symbol")
    if p.n < 1:
        raise SymbolError("check_H1: dimension must be >= 1")

    m = p.order
    witnesses = []
    flags = []
    if m % 2 != 0:
        witnesses.append(Witness("structure", None, float(m), f"order m={m} is odd"))
    if m < 4:
        witnesses.append(Witness("structure", None, float(m), f"order m={m} < 4"))
    if p.n < 2:
        witnesses.append(Witness("structure", None, float(p.n), f"dimension n={p.n} < 2"))

    dirs = cfg.directions(p.n)
    pm = principal_part(p)
    pm_vals = np.atleast_1d(pm.evaluate(dirs))
    pm_max = float(np.max(np.abs(pm_vals)))
    tol = cfg.positivity_rtol * max(1.0, pm_max)
    bad = np.nonzero(pm_vals <= tol)[0]
    if bad.size:
        first = int(bad[0])
        amin = int(np.argmin(pm_vals))
        for idx in dict.fromkeys([first, amin]):
            witnesses.append(Witness(
                "ellipticity", tuple(float(v) for v in dirs[idx]), float(pm_vals[idx]),
                "principal part is not positive on this direction"))

    radii = cfg.radii()
    ball_dirs = dirs[:: max(1, len(dirs) // cfg.ball_dir_count)]
    pts = (radii[:, None, None] * ball_dirs[None, :, :]).reshape(-1, p.n)
    p_vals = np.atleast_1d(p.evaluate(pts))
    p_min = float(np.min(p_vals))
    if p_min <= 0.0:
        idx = int(np.argmin(p_vals))
        witnesses.append(Witness(
            "positivity", tuple(float(v) for v in pts[idx]), float(p_vals[idx]),
            "P is not strictly positive at this point"))

    passed = not witnesses
    desc = (f"{len(dirs)} sphere directions; ball radius {cfg.ball_radius} with "
            f"{cfg.radial_count} radii x {len(ball_dirs)} directions; "
            f"min P_m on sphere = {float(np.min(pm_vals))!r}, min P on ball = {p_min!r}")
    return HypothesisReport(
        name="H1", passed=passed, witnesses=tuple(witnesses[: cfg.max_witnesses]),
        sampled_min=float(np.min(pm_vals)), sampled_max=pm_max,
        description=desc, flags=tuple(flags),
    )


def check_H2(p: SymbolPoly, cfg: SamplingConfig | None = None) -> HypothesisReport:
    """Non-degeneracy of Hess P_m on the sphere.

    det Hess P_m is homogeneous of degree n(m-2), so a dense sphere probe
    determines the sign pattern everywhere away from 0.  Pass requires
    min |det| >= nondegeneracy_rtol * max |det| over the samples, which
    makes the verdict invariant under positive rescaling of p.

    An equivalent formulation checks, for each z on the sphere, that
    w -> <z, w> P_m(w)^{-1/m} has non-degenerate spherical Hessians at its
    critical points; only the determinant form above is implemented here.
    """
    cfg = cfg or SamplingConfig()
    if p.is_zero:
        raise SymbolError("check_H2: zero polynomial is not a valid symbol")
    m = p.order
    flags = []
    if m < 4:
        flags.append(f"m={m} < 4: outside the intended symbol class, checked anyway")
    pm = principal_part(p)
    dirs = cfg.directions(p.n)
    dets = hessian_det_values(pm, dirs)
    abs_dets = np.abs(dets)
    dmin, dmax = float(np.min(abs_dets)), float(np.max(abs_dets))
    floor = cfg.nondegeneracy_rtol * dmax
    witnesses = []
    bad = np.nonzero(abs_dets < floor)[0]
    if bad.size:
        first = int(bad[0])
        amin = int(np.argmin(abs_dets))
        for idx in dict.fromkeys([first, amin]):
            witnesses.append(Witness(
                "nondegeneracy", tuple(float(v) for v in dirs[idx]), float(dets[idx]),
                "det Hess of the principal part vanishes (relative to sphere max)"))
    passed = not witnesses
    desc = (f"{len(dirs)} sphere directions; min |det Hess P_m| = {dmin!r}, "
            f"max = {dmax!r}, relative floor = {cfg.nondegeneracy_rtol!r}")
    return HypothesisReport(
        name="H2", passed=passed, witnesses=tuple(witnesses[: cfg.max_witnesses]),
        sampled_min=dmin, sampled_max=dmax, description=desc, flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# Growth of det Hess sqrt(P) along rays
# ---------------------------------------------------------------------------

def sqrt_hessian_growth_exponent(m, n) -> int:
    """Expected log-log slope of det Hess sqrt(P) along rays: n(m/2 - 2)."""
    return n * (m // 2 - 2)


@dataclass(frozen=True)
class HessianGrowthFit:
    """Per-direction fit of log |det Hess sqrt(P)(R w)| against log R."""

    direction: tuple
    fit: DecayFit | None
    level: float | None  # fitted |det| / R^exponent at R = 1
    sign_change: bool
    det_values: tuple


def hessian_growth_sqrt(p: SymbolPoly, radii, dirs) -> list[HessianGrowthFit]:
    """Fit the radial growth of det Hess sqrt(P) for each probe direction.

    Directions whose determinant changes sign inside the radius window get
    sign_change=True and no fit, rather than being dropped silently.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 5 or radii.max() < 10.0 * radii.min():
        raise SymbolError("radii must contain >= 5 values spanning at least one decade")
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    out = []
    for w in dirs:
        pts = radii[:, None] * w[None, :]
        dets = sqrt_hessian_det_values(p, pts)
        if np.any(dets == 0.0) or (np.min(np.sign(dets)) != np.max(np.sign(dets))):
            out.append(HessianGrowthFit(tuple(w), None, None, True, tuple(dets)))
            continue
        fit = fit_power_law(radii, np.abs(dets))
        out.append(HessianGrowthFit(
            tuple(w), fit, math.exp(fit.log_level), False, tuple(dets)))
    return out


# ---------------------------------------------------------------------------
# Hypersurface contact order of the graph of sqrt(P)
# ---------------------------------------------------------------------------

def _multi_indices(n, k):
    """All multi-indices of total order k in n variables, lexicographic."""
    if n == 1:
        yield (k,)
        return
    for head in range(k, -1, -1):
        for rest in _multi_indices(n - 1, k - head):
            yield (head,) + rest


def _strict_sub_indices(alpha):
    ranges = [range(a + 1) for a in alpha]
    for beta in itertools.product(*ranges):
        if any(beta) and beta != alpha:
            yield beta


def _multinomial(alpha, beta):
    f = 1
    for a, b in zip(alpha, beta):
        f *= math.comb(a, b)
    return f


def surface_type(p: SymbolPoly, xi0, k_max) -> int | None:
    """Smallest k in [2, k_max] with a nonvanishing k-th derivative of sqrt(P) at xi0.

    Derivatives of g = sqrt(P) come from the recurrence obtained by
    differentiating g*g = P, so no numerical differentiation is involved.
    A k-tensor counts as vanishing when its largest entry stays below
    1e-9 * (1 + |P(xi0)|).  Returns None when every probed order up to
    k_max vanishes.
    """
    if k_max < 2:
        raise SymbolError("k_max must be >= 2")
    xi0 = np.asarray(xi0, dtype=float)
    P0 = p.evaluate(xi0)
    if P0 <= 0:
        raise SymbolError(f"surface_type needs P(xi0) > 0, got {P0!r}")
    tol = 1e-9 * (1.0 + abs(P0))
    g = {(0,) * p.n: math.sqrt(P0)}
    g0 = g[(0,) * p.n]
    for k in range(1, k_max + 1):
        level_max = 0.0
        for alpha in _multi_indices(p.n, k):
            dP = derivative(p, alpha).evaluate(xi0)
            acc = 0.0
            for beta in _strict_sub_indices(alpha):
                gamma = tuple(a - b for a, b in zip(alpha, beta))
                acc += _multinomial(alpha, beta) * g[beta] * g[gamma]
            val = (dP - acc) / (2.0 * g0)
            g[alpha] = val
            level_max = max(level_max, abs(val))
        if k >= 2 and level_max > tol:
            return k
    return None


# ---------------------------------------------------------------------------
# Radial inverse rho(s, w) of P(rho w) = s for large s
# ---------------------------------------------------------------------------

def ray_coefficients(p: SymbolPoly, omega) -> np.ndarray:
    """Coefficients c[k] of the univariate polynomial P(rho * omega)."""
    omega = np.asarray(omega, dtype=float)
    c = np.zeros(p.order + 1)
    for alpha, coef in p.terms:
        k = sum(alpha)
        val = coef
        for i, a in enumerate(alpha):
            if a:
                val *= omega[i] ** a
        c[k] += val
    return c


def radial_threshold(p: SymbolPoly, directions=None, dir_count=64, seed=0) -> float:
    """Computed threshold a: for s >= a the equation P(rho w) = s has a
    unique positive root along every probed direction.

    Per direction, the largest value of P over the radial critical set
    (rho = 0 plus positive roots of d/drho P(rho w)) bounds the region
    where the restriction can fail to be monotone; the returned a doubles
    the worst such value for margin.
    """
    if directions is None:
        directions = sphere_directions(p.n, dir_count, seed)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    worst = 0.0
    for w in directions:
        c = ray_coefficients(p, w)
        dc = np.polynomial.polynomial.polyder(c)
        crit = [0.0]
        nz = np.nonzero(dc)[0]
        if nz.size:
            dc_trim = dc[: nz[-1] + 1]
            if dc_trim.size > 1:
                roots = np.polynomial.polynomial.polyroots(dc_trim)
                for r in roots:
                    if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real)) and r.real > 0:
                        crit.append(float(r.real))
        vals = [float(np.polynomial.polynomial.polyval(r, c)) for r in crit]
        worst = max(worst, max(vals))
    return 2.0 * worst


@dataclass(frozen=True)
class RadialInverse:
    """Radial inverse rho(s, w) and its deviation sigma from the
    homogeneous prediction s^{1/m} P_m(w)^{-1/m}."""

    omega: tuple
    s: tuple
    rho: tuple
    sigma: tuple
    residuals: tuple
    threshold: float

    def as_arrays(self):
        return (np.asarray(self.s), np.asarray(self.rho), np.asarray(self.sigma))


def radial_inverse(p: SymbolPoly, omega, s_grid, newton_tol=1e-12,
                   max_iter=60, threshold=None) -> RadialInverse:
    """Solve P(rho w) = s for each s in s_grid by Newton iteration.

    The initial guess is the homogeneous prediction s^{1/m} P_m(w)^{-1/m};
    iterates leaving the bracket [rho0/4, 4 rho0] fall back to bisection.
    Every s must lie above the computed threshold.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    s_grid = np.asarray(s_grid, dtype=float)
    m = p.order
    c = ray_coefficients(p, omega)
    pm_w = c[m]
    if pm_w <= 0:
        raise RadialInverseError("principal part non-positive along this direction",
                                 omega=tuple(omega))
    if threshold is None:
        probe = np.vstack([sphere_directions(p.n, 64, 0), omega[None, :]])
        threshold = radial_threshold(p, probe)
    if np.min(s_grid) < threshold:
        raise RadialInverseError(
            f"s = {float(np.min(s_grid))!r} below computed threshold a = {threshold!r}",
            s=float(np.min(s_grid)), omega=tuple(omega))

    dc = np.polynomial.polynomial.polyder(c)
    polyval = np.polynomial.polynomial.polyval
    rhos, sigmas, residuals = [], [], []
    for s in s_grid:
        rho0 = (s / pm_w) ** (1.0 / m)
        lo, hi = rho0 / 4.0, 4.0 * rho0
        rho = rho0
        ok = False
        for _ in range(max_iter):
            f = polyval(rho, c) - s
            if abs(f) <= newton_tol * (1.0 + s):
                ok = True
                break
            df = polyval(rho, dc)
            step = f / df if df != 0 else None
            if step is None or not (lo <= rho - step <= hi):
                flo = polyval(lo, c) - s
                fhi = polyval(hi, c) - s
                if flo > 0 or fhi < 0:
                    raise RadialInverseError(
                        "bisection bracket does not contain the root",
                        s=float(s), omega=tuple(omega))
                mid = 0.5 * (lo + hi)
                if (polyval(mid, c) - s) < 0:
                    lo = mid
                else:
                    hi = mid
                rho = 0.5 * (lo + hi)
            else:
                rho = rho - step
        if not ok:
            f = polyval(rho, c) - s
            if abs(f) <= newton_tol * (1.0 + s):
                ok = True
        if not ok:
            raise RadialInverseError(
                f"no convergence after {max_iter} iterations",
                s=float(s), omega=tuple(omega))
        if rho <= 0:
            raise RadialInverseError("converged to a non-positive radius",
                                     s=float(s), omega=tuple(omega))
        rhos.append(float(rho))
        sigmas.append(float(rho - s ** (1.0 / m) * pm_w ** (-1.0 / m)))
        residuals.append(float(abs(polyval(rho, c) - s) / (1.0 + s)))
    return RadialInverse(
        omega=tuple(omega), s=tuple(float(x) for x in s_grid),
        rho=tuple(rhos), sigma=tuple(sigmas), residuals=tuple(residuals),
        threshold=float(threshold),
    )


def sigma_decay_fit(inv: RadialInverse) -> DecayFit:
    """Fitted decay exponent of |d sigma / d s| via central finite differences.

    Companion diagnostic for the radial inverse: the symbol-class bound
    predicts at least one power of s lost per s-derivative.
    """
    s, _, sigma = inv.as_arrays()
    if s.size < 7:
        raise RadialInverseError("need at least 7 grid nodes for the decay diagnostic")
    dsig = (sigma[2:] - sigma[:-2]) / (s[2:] - s[:-2])
    mids = s[1:-1]
    return fit_power_law(mids, np.abs(dsig))
