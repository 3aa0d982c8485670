"""Exact rational geometry of admissible (1/p, 1/q) index regions.

Everything here is Fraction arithmetic; no floating point enters the
region builders or the membership tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class RegionError(ValueError):
    """Invalid region parameters or inadmissible index point."""


def _fr(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise RegionError(f"expected an exact rational, got {value!r}")


@dataclass(frozen=True)
class IndexPoint:
    """Point (1/p, 1/q) in the unit square, exact."""

    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "inv_p", _fr(self.inv_p))
        object.__setattr__(self, "inv_q", _fr(self.inv_q))
        if not (0 <= self.inv_p <= 1 and 0 <= self.inv_q <= 1):
            raise RegionError(f"index point {self} outside the unit square")

    def as_tuple(self):
        return (self.inv_p, self.inv_q)


@dataclass(frozen=True)
class IndexRegion:
    """Convex polygon of admissible index pairs with vertex labels."""

    kind: str
    m: int
    n: int
    a: Fraction | None
    vertices: tuple
    labels: tuple
    degenerate: bool = False
    notes: tuple = ()

    def distinct_vertices(self):
        seen = []
        for v in self.vertices:
            if v not in seen:
                seen.append(v)
        return seen


def mu_q(a, m, n):
    """Exact pair (mu_a, q_a) with mu_a = (mn - 4n + 2a)/(2(m-2)), q_a = n/mu_a.

    q_a is None when mu_a = 0 (the q = infinity degeneracy); negative
    mu_a means the region is undefined.
    """
    a = _fr(a)
    m, n = int(m), int(n)
    if m < 4 or m % 2 != 0:
        raise RegionError(f"order m must be even and >= 4, got {m}")
    if n < 2:
        raise RegionError(f"dimension n must be >= 2, got {n}")
    mu = Fraction(m * n - 4 * n, 2 * (m - 2)) + Fraction(2, 2 * (m - 2)) * a
    if mu < 0:
        raise RegionError(f"mu_a = {mu} < 0: index region undefined for a = {a}")
    q = None if mu == 0 else Fraction(n) / mu
    return mu, q


_HALF = Fraction(1, 2)


def _quadrangle_points(a, m, n):
    mu, q = mu_q(a, m, n)
    inv_q_B = Fraction(0) if q is None else 1 / q
    A = IndexPoint(_HALF, _HALF)
    B = IndexPoint(Fraction(1), inv_q_B)
    C = IndexPoint(Fraction(1), Fraction(0))
    D = IndexPoint(1 - inv_q_B, Fraction(0))
    return A, B, C, D, mu, q


def _ef_points(m, n):
    E = IndexPoint(Fraction(n + m, 2 * n), _HALF)
    F = IndexPoint(_HALF, Fraction(n - m, 2 * n))
    return E, F


def build_region(kind, m, n, a=None) -> IndexRegion:
    """Construct one of the admissible index regions.

    kinds: "delta_a" (quadrangle ABCD for the given a; "delta_m" and
    "delta_0" are shorthands), "AEF" (triangle), "hexagon" (AEBCDF), and
    "pentagon" (the n < m < 2n variant; m >= 2n yields the full half
    square).  Degenerate collapses are flagged, not hidden.
    """
    m, n = int(m), int(n)
    notes = []
    if kind == "delta_m":
        kind, a = "delta_a", Fraction(m)
    elif kind == "delta_0":
        kind, a = "delta_a", Fraction(0)

    if kind == "delta_a":
        if a is None:
            raise RegionError("delta_a needs the parameter a")
        a = _fr(a)
        A, B, C, D, mu, q = _quadrangle_points(a, m, n)
        degenerate = B == C or D == C or B == D
        if q is None:
            notes.append("q_a is infinite (mu_a = 0): B and D collapse onto C")
        if a == m and n < m:
            raise RegionError(f"delta_m requires n >= m, got n={n} < m={m}")
        return IndexRegion(kind="delta_a", m=m, n=n, a=a,
                           vertices=(A, B, C, D), labels=("A", "B", "C", "D"),
                           degenerate=degenerate, notes=tuple(notes))

    if kind == "AEF":
        if n < m:
            raise RegionError(f"AEF requires n >= m, got n={n} < m={m}")
        E, F = _ef_points(m, n)
        A = IndexPoint(_HALF, _HALF)
        degenerate = F.inv_q == 0
        if degenerate:
            notes.append("n = m: F touches the 1/q = 0 axis")
        return IndexRegion(kind="AEF", m=m, n=n, a=None,
                           vertices=(A, E, F), labels=("A", "E", "F"),
                           degenerate=degenerate, notes=tuple(notes))

    if kind == "hexagon":
        if n < m:
            raise RegionError(f"hexagon requires n >= m, got n={n} < m={m}")
        A, B, C, D, mu, q = _quadrangle_points(Fraction(m), m, n)
        E, F = _ef_points(m, n)
        verts = (A, E, B, C, D, F)
        degenerate = len(set(verts)) != 6
        return IndexRegion(kind="hexagon", m=m, n=n, a=Fraction(m),
                           vertices=verts, labels=("A", "E", "B", "C", "D", "F"),
                           degenerate=degenerate, notes=tuple(notes))

    if kind == "pentagon":
        if m <= n:
            raise RegionError(f"pentagon is the n < m variant, got m={m} <= n={n}")
        if m >= 2 * n:
            verts = (IndexPoint(_HALF, _HALF), IndexPoint(1, _HALF),
                     IndexPoint(1, Fraction(0)), IndexPoint(_HALF, Fraction(0)))
            notes.append("m >= 2n: admissible set is the full half square")
            return IndexRegion(kind="pentagon", m=m, n=n, a=None, vertices=verts,
                               labels=("A", "A'", "C", "C'"), degenerate=False,
                               notes=tuple(notes))
        m1 = m // 2
        verts = (IndexPoint(_HALF, _HALF),
                 IndexPoint(1, _HALF),
                 IndexPoint(1, Fraction(n - m1, n)),
                 IndexPoint(Fraction(m1, n), Fraction(0)),
                 IndexPoint(_HALF, Fraction(0)))
        notes.append("endpoint list implemented verbatim from the source statement")
        return IndexRegion(kind="pentagon", m=m, n=n, a=None, vertices=verts,
                           labels=("P1", "P2", "P3", "P4", "P5"),
                           degenerate=len(set(verts)) != 5, notes=tuple(notes))

    raise RegionError(f"unknown region kind {kind!r}")


# ---------------------------------------------------------------------------
# Membership
# ---------------------------------------------------------------------------

def _cross(o, a, b):
    return ((a.inv_p - o.inv_p) * (b.inv_q - o.inv_q)
            - (a.inv_q - o.inv_q) * (b.inv_p - o.inv_p))


def _on_segment(p, a, b):
    if _cross(a, b, p) != 0:
        return False
    return (min(a.inv_p, b.inv_p) <= p.inv_p <= max(a.inv_p, b.inv_p)
            and min(a.inv_q, b.inv_q) <= p.inv_q <= max(a.inv_q, b.inv_q))


def locate(region: IndexRegion, pt: IndexPoint) -> str:
    """Exact point location: "interior", "boundary", or "outside"."""
    verts = region.distinct_vertices()
    if len(verts) == 1:
        return "boundary" if pt == verts[0] else "outside"
    if len(verts) == 2 or all(
            _cross(verts[0], verts[1], v) == 0 for v in verts[2:]):
        for a in verts:
            for b in verts:
                if a != b and _on_segment(pt, a, b):
                    return "boundary"
        return "outside"
    # orient counterclockwise
    area = sum(_cross(verts[0], verts[i], verts[i + 1])
               for i in range(1, len(verts) - 1))
    if area < 0:
        verts = verts[::-1]
    on_edge = False
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        c = _cross(a, b, pt)
        if c < 0:
            return "outside"
        if c == 0 and _on_segment(pt, a, b):
            on_edge = True
    return "boundary" if on_edge else "interior"


@dataclass(frozen=True)
class Classification:
    location: str  # interior / boundary / outside
    norm_tag: str  # which (input, output) norm pair applies at this point


def classify(region: IndexRegion, pt: IndexPoint, a=None) -> Classification:
    """Locate pt in the region and name the norm pair that applies there.

    At B = (1, 1/q_a) the output norm weakens to weak-L^{q_a}; at
    D = (1/q_a', 0) the input weakens to the Lorentz (q_a', 1) space;
    on the AEF edge with 1/q = 1/p - m/(2n) the output is weak-L^q.
    Everywhere else the strong pair applies.
    """
    loc = locate(region, pt)
    tag = "(L^p, L^q)"
    if region.kind in ("delta_a", "hexagon"):
        a_eff = _fr(a) if a is not None else (region.a if region.a is not None else None)
        if a_eff is not None:
            mu, q = mu_q(a_eff, region.m, region.n)
            if q is not None and q != 1:
                inv_q_B = 1 / q
                B = IndexPoint(Fraction(1), inv_q_B)
                D = IndexPoint(1 - inv_q_B, Fraction(0))
                q_conj = q / (q - 1)
                if pt == B:
                    tag = f"(L^1, weak-L^{q})"
                elif pt == D:
                    tag = f"(lorentz-L^({q_conj},1), L^inf)"
    if region.kind == "AEF":
        m_over_2n = Fraction(region.m, 2 * region.n)
        if pt.inv_q == pt.inv_p - m_over_2n and loc != "outside":
            q = None if pt.inv_q == 0 else Fraction(1) / pt.inv_q
            tag = f"(L^p, weak-L^{q if q is not None else 'inf'})"
    return Classification(location=loc, norm_tag=tag)


def contains_bruteforce(region: IndexRegion, pt: IndexPoint) -> bool:
    """Independent membership test: intersection of edge half-planes.

    Used to cross-check `locate`; closed regions, so boundary counts.
    """
    verts = region.distinct_vertices()
    if len(verts) < 3 or all(_cross(verts[0], verts[1], v) == 0 for v in verts[2:]):
        return any(_on_segment(pt, a, b) for a in verts for b in verts if a != b) \
            or (len(verts) == 1 and pt == verts[0])
    area = sum(_cross(verts[0], verts[i], verts[i + 1])
               for i in range(1, len(verts) - 1))
    oriented = verts if area > 0 else verts[::-1]
    for i in range(len(oriented)):
        a, b = oriented[i], oriented[(i + 1) % len(oriented)]
        if _cross(a, b, pt) < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def region_to_dict(region: IndexRegion) -> dict:
    return {
        "kind": region.kind,
        "m": region.m,
        "n": region.n,
        "a": None if region.a is None else f"{region.a.numerator}/{region.a.denominator}",
        "degenerate": region.degenerate,
        "notes": list(region.notes),
        "labels": list(region.labels),
        "vertices": [
            [f"{v.inv_p.numerator}/{v.inv_p.denominator}",
             f"{v.inv_q.numerator}/{v.inv_q.denominator}"]
            for v in region.vertices
        ],
    }


_SVG_STYLES = {
    "delta_a": ("#000000", "none"),
    "hexagon": ("#aa0000", "2,4"),
    "AEF": ("#aa0000", "7,4"),
    "pentagon": ("#006600", "2,4"),
}


def regions_svg(regions, size=480, margin=48) -> str:
    """Index-square picture with the region overlays (solid quadrangle,
    dashed triangle, dotted extensions), as a deterministic SVG string."""
    span = size - 2 * margin

    def px(fr):
        return margin + float(fr) * span

    def py(fr):
        return size - margin - float(fr) * span

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{px(0)}" y1="{py(0)}" x2="{px(1.05)}" y2="{py(0)}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{px(0)}" y1="{py(0)}" x2="{px(0)}" y2="{py(0) - span * 0.6}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{px(1.05) + 4:.1f}" y="{py(0) + 4:.1f}" font-size="13">1/p</text>',
        f'<text x="{px(0) - 8:.1f}" y="{py(0) - span * 0.6 - 6:.1f}" font-size="13">1/q</text>',
    ]
    for frac_val, label in ((0.5, "1/2"), (1.0, "1")):
        out.append(f'<line x1="{px(frac_val)}" y1="{py(0) - 4}" x2="{px(frac_val)}" '
                   f'y2="{py(0) + 4}" stroke="black"/>')
        out.append(f'<text x="{px(frac_val) - 8:.1f}" y="{py(0) + 18:.1f}" '
                   f'font-size="11">{label}</text>')
    out.append(f'<line x1="{px(0) - 4}" y1="{py(0.5)}" x2="{px(0) + 4}" y2="{py(0.5)}" '
               'stroke="black"/>')
    out.append(f'<text x="{px(0) - 28:.1f}" y="{py(0.5) + 4:.1f}" font-size="11">1/2</text>')

    for region in regions:
        color, dash = _SVG_STYLES.get(region.kind, ("#444444", "1,3"))
        pts = " ".join(f"{px(v.inv_p):.2f},{py(v.inv_q):.2f}" for v in region.vertices)
        dash_attr = f' stroke-dasharray="{dash}"' if dash != "none" else ""
        out.append(f'<polygon points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr}/>')
        for v, lab in zip(region.vertices, region.labels):
            out.append(f'<circle cx="{px(v.inv_p):.2f}" cy="{py(v.inv_q):.2f}" r="3" '
                       f'fill="{color}"/>')
            out.append(f'<text x="{px(v.inv_p) + 5:.2f}" y="{py(v.inv_q) - 5:.2f}" '
                       f'font-size="12" fill="{color}">{lab}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
