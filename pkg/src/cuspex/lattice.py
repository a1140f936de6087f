"""Exact arithmetic for PSL(2, Z) and PSL(2, Z[i]).

Group elements are 2x2 matrices with entries in Z (plain Python ints) or in
the Gaussian integers (``(re, im)`` tuples of Python ints).  Entries are
arbitrary precision, so long random-walk products never overflow.
"""
from __future__ import annotations

import json
import math
import operator
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class UnknownPreset(ValueError):
    pass


class NotFound(LookupError):
    pass


class GroupSpecError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Rings
# ---------------------------------------------------------------------------


class IntegerRing:
    """The integers; elements are Python ints."""

    name = "Z"
    dim = 2
    zero = 0
    one = 1
    units = (1, -1)

    add = staticmethod(operator.add)
    sub = staticmethod(operator.sub)
    mul = staticmethod(operator.mul)
    neg = staticmethod(operator.neg)

    @staticmethod
    def conj(x):
        return x

    @staticmethod
    def norm(x):
        return x * x

    @staticmethod
    def is_zero(x):
        return x == 0

    @staticmethod
    def from_int(n):
        return int(n)

    @staticmethod
    def parse(value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise GroupSpecError(f"expected an integer entry, got {value!r}")
        return value

    @staticmethod
    def to_json(x):
        return x

    @staticmethod
    def nearest(z: complex):
        return int(round(z.real))

    @staticmethod
    def nearest_fraction(re: Fraction, im: Fraction):
        return round(re)

    @staticmethod
    def parts(x) -> Tuple[int, int]:
        return x, 0

    @staticmethod
    def from_parts(re: int, im: int):
        if im:
            raise ValueError("integer ring element with imaginary part")
        return re

    @staticmethod
    def ratio_to_complex(p, q) -> complex:
        if q == 0:
            raise ZeroDivisionError
        return complex(p / q)

    @staticmethod
    def divmod_round(x, y):
        # nearest-integer division, used by the Euclidean algorithm
        q = (2 * x + y) // (2 * y)
        return q, x - q * y

    @staticmethod
    def canonical_unit(x):
        """Unit u such that u*x is the canonical associate of x."""
        return -1 if x < 0 else 1

    @staticmethod
    def sign_key(x):
        return (x > 0) - (x < 0), 0

    def __repr__(self):
        return "ZZ"


class GaussianRing:
    """The Gaussian integers Z[i]; elements are ``(re, im)`` int tuples."""

    name = "Z[i]"
    dim = 3
    zero = (0, 0)
    one = (1, 0)
    units = ((1, 0), (-1, 0), (0, 1), (0, -1))

    @staticmethod
    def add(x, y):
        return (x[0] + y[0], x[1] + y[1])

    @staticmethod
    def sub(x, y):
        return (x[0] - y[0], x[1] - y[1])

    @staticmethod
    def mul(x, y):
        a, b = x
        c, d = y
        return (a * c - b * d, a * d + b * c)

    @staticmethod
    def neg(x):
        return (-x[0], -x[1])

    @staticmethod
    def conj(x):
        return (x[0], -x[1])

    @staticmethod
    def norm(x):
        return x[0] * x[0] + x[1] * x[1]

    @staticmethod
    def is_zero(x):
        return x[0] == 0 and x[1] == 0

    @staticmethod
    def from_int(n):
        return (int(n), 0)

    @staticmethod
    def parse(value):
        if isinstance(value, bool):
            raise GroupSpecError(f"bad Gaussian integer entry {value!r}")
        if isinstance(value, int):
            return (value, 0)
        if (isinstance(value, (list, tuple)) and len(value) == 2
                and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
            return (value[0], value[1])
        raise GroupSpecError(f"expected an integer or [re, im] pair, got {value!r}")

    @staticmethod
    def to_json(x):
        return [x[0], x[1]]

    @staticmethod
    def nearest(z: complex):
        return (int(round(z.real)), int(round(z.imag)))

    @staticmethod
    def nearest_fraction(re: Fraction, im: Fraction):
        return (round(re), round(im))

    @staticmethod
    def parts(x) -> Tuple[int, int]:
        return x

    @staticmethod
    def from_parts(re: int, im: int):
        return (re, im)

    @staticmethod
    def ratio_to_complex(p, q) -> complex:
        a, b = p
        c, d = q
        # drop low bits of huge entries; the result only needs double precision
        shift = min(max(abs(a).bit_length(), abs(b).bit_length()),
                    max(abs(c).bit_length(), abs(d).bit_length())) - 160
        if shift > 0:
            a, b, c, d = a >> shift, b >> shift, c >> shift, d >> shift
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError
        return complex((a * c + b * d) / den, (b * c - a * d) / den)

    @staticmethod
    def divmod_round(x, y):
        a, b = x
        c, d = y
        den = c * c + d * d
        re = a * c + b * d
        im = b * c - a * d
        q = ((2 * re + den) // (2 * den), (2 * im + den) // (2 * den))
        return q, GaussianRing.sub(x, GaussianRing.mul(q, y))

    @staticmethod
    def canonical_unit(x):
        a, b = x
        if a > 0 and b >= 0:
            return (1, 0)
        if a <= 0 and b > 0:
            return (0, -1)   # -i * (a + bi) = b - ai
        if a < 0 and b <= 0:
            return (-1, 0)
        return (0, 1)        # i * (a + bi) = -b + ai

    @staticmethod
    def sign_key(x):
        a, b = x
        if a:
            return (1 if a > 0 else -1), 0
        return 0, (b > 0) - (b < 0)

    def __repr__(self):
        return "ZI"


ZZ = IntegerRing()
ZI = GaussianRing()


def ring_gcd(ring, x, y):
    while not ring.is_zero(y):
        _, r = ring.divmod_round(x, y)
        x, y = y, r
    return x


def ring_is_unit(ring, x) -> bool:
    return ring.norm(x) == 1


def normalize_pair(ring, p, q):
    """Canonical associate of a projective pair (p : q) up to units.

    Used as the exact identity of cusps and horoballs: q is made canonical,
    or p if q vanishes.
    """
    u = ring.canonical_unit(q if not ring.is_zero(q) else p)
    return ring.mul(u, p), ring.mul(u, q)


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------


class OverflowGuard(ArithmeticError):
    """Reserved for fixed-width backends; Python ints never overflow."""


@dataclass(frozen=True)
class GroupElement:
    """Normalized representative of +-M with M in SL(2, ring)."""

    a: object
    b: object
    c: object
    d: object
    ring: object = field(default=ZZ, compare=False, repr=False)

    def __post_init__(self):
        ring = self.ring
        det = ring.sub(ring.mul(self.a, self.d), ring.mul(self.b, self.c))
        if det != ring.one:
            raise ValueError(f"determinant {det!r} != 1")
        self._normalize_sign()

    @classmethod
    def _trusted(cls, a, b, c, d, ring):
        """Skip the determinant check; for products of known elements."""
        g = object.__new__(cls)
        object.__setattr__(g, "a", a)
        object.__setattr__(g, "b", b)
        object.__setattr__(g, "c", c)
        object.__setattr__(g, "d", d)
        object.__setattr__(g, "ring", ring)
        g._normalize_sign()
        return g

    def _normalize_sign(self):
        ring = self.ring
        # first nonzero entry gets positive real part (ties: positive imag)
        for x in (self.a, self.b, self.c, self.d):
            if not ring.is_zero(x):
                if ring.sign_key(x) < (0, 0) or ring.sign_key(x) == (-1, 0):
                    neg = ring.neg
                    object.__setattr__(self, "a", neg(self.a))
                    object.__setattr__(self, "b", neg(self.b))
                    object.__setattr__(self, "c", neg(self.c))
                    object.__setattr__(self, "d", neg(self.d))
                break

    @classmethod
    def identity(cls, ring=ZZ):
        return cls(ring.one, ring.zero, ring.zero, ring.one, ring)

    @classmethod
    def from_entries(cls, entries, ring=ZZ):
        (a, b), (c, d) = entries
        p = ring.parse
        return cls(p(a), p(b), p(c), p(d), ring)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __invert__(self):
        return inverse(self)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def complex_entries(self) -> Tuple[complex, complex, complex, complex]:
        r = self.ring
        return tuple(complex(*r.parts(x)) for x in self.entries())

    def trace(self):
        return self.ring.add(self.a, self.d)

    def max_entry_bits(self) -> int:
        return max(max(abs(v).bit_length() for v in self.ring.parts(x)) for x in self.entries())

    def to_json(self):
        t = self.ring.to_json
        return [[t(self.a), t(self.b)], [t(self.c), t(self.d)]]


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    r = g.ring
    m, ad = r.mul, r.add
    return GroupElement._trusted(
        ad(m(g.a, h.a), m(g.b, h.c)), ad(m(g.a, h.b), m(g.b, h.d)),
        ad(m(g.c, h.a), m(g.d, h.c)), ad(m(g.c, h.b), m(g.d, h.d)), r)


def inverse(g: GroupElement) -> GroupElement:
    r = g.ring
    return GroupElement._trusted(g.d, r.neg(g.b), r.neg(g.c), g.a, r)


def normalize(g: GroupElement) -> GroupElement:
    # construction already normalizes; kept as an explicit operation
    return GroupElement(g.a, g.b, g.c, g.d, g.ring)


def power(g: GroupElement, n: int) -> GroupElement:
    if n < 0:
        g, n = inverse(g), -n
    result = GroupElement.identity(g.ring)
    while n:
        if n & 1:
            result = result * g
        g = g * g
        n >>= 1
    return result


def apply_projective(g: GroupElement, p, q):
    """Act on the boundary point (p : q) without reducing."""
    r = g.ring
    m, ad = r.mul, r.add
    return ad(m(g.a, p), m(g.b, q)), ad(m(g.c, p), m(g.d, q))


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


@dataclass
class CuspRep:
    fixed_point: object          # projective pair (p, q); (1, 0) is infinity
    stabilizer: List[str]


@dataclass
class GroupPreset:
    name: str
    ring: object
    generators: Dict[str, GroupElement]
    cusps: List[CuspRep]
    relators: List[Tuple[str, ...]] = field(default_factory=list)
    commutations: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.ring.dim

    def symmetric_generators(self, labels: Optional[Sequence[str]] = None) -> Dict[str, GroupElement]:
        """Generators closed under inverses; inverse labels carry a ``^-1`` suffix."""
        labels = list(labels) if labels is not None else list(self.generators)
        out = {}
        for lab in labels:
            g = self.generators[lab]
            out[lab] = g
            gi = inverse(g)
            if gi != g and gi not in out.values():
                out[lab + "^-1"] = gi
        return out

    def word(self, text: str) -> GroupElement:
        """Evaluate a word such as ``"S*T^-1*T^3"``."""
        g = GroupElement.identity(self.ring)
        text = text.strip()
        if text in ("", "1", "id", "e"):
            return g
        for tok in text.split("*"):
            tok = tok.strip()
            if "^" in tok:
                lab, exp = tok.split("^", 1)
                n = int(exp)
            else:
                lab, n = tok, 1
            if lab not in self.generators:
                raise GroupSpecError(f"unknown generator {lab!r} in word {text!r}")
            g = g * power(self.generators[lab], n)
        return g

    def relator_check(self) -> Dict[str, bool]:
        ident = GroupElement.identity(self.ring)
        out = {}
        for rel in self.relators:
            out["".join(rel)] = self.word("*".join(rel)) == ident
        for x, y in self.commutations:
            gx, gy = self.generators[x], self.generators[y]
            out[f"{x}{y}={y}{x}"] = gx * gy == gy * gx
        for i, cusp in enumerate(self.cusps):
            for lab in cusp.stabilizer:
                out[f"cusp{i}:{lab}-parabolic-fixing"] = is_parabolic_fixing(
                    self.generators[lab], cusp.fixed_point)
        return out


def is_parabolic_fixing(g: GroupElement, point) -> bool:
    r = g.ring
    tr = r.add(g.a, g.d)
    if tr not in (r.from_int(2), r.from_int(-2)):
        return False
    p, q = point
    gp, gq = apply_projective(g, p, q)
    # projective equality gp/gq == p/q
    return r.sub(r.mul(gp, q), r.mul(gq, p)) == r.zero and not (r.is_zero(gp) and r.is_zero(gq))


def _mat(ring, a, b, c, d):
    f = ring.parse
    return GroupElement(f(a), f(b), f(c), f(d), ring)


def preset(name: str) -> GroupPreset:
    if name == "psl2z":
        gens = {"S": _mat(ZZ, 0, -1, 1, 0), "T": _mat(ZZ, 1, 1, 0, 1)}
        return GroupPreset(
            "psl2z", ZZ, gens, [CuspRep((1, 0), ["T"])],
            relators=[("S", "S"), ("S", "T", "S", "T", "S", "T")])
    if name == "psl2zi":
        gens = {
            "S": _mat(ZI, 0, -1, 1, 0),
            "T": _mat(ZI, 1, 1, 0, 1),
            "U": _mat(ZI, 1, [0, 1], 0, 1),
            "A": _mat(ZI, [0, 1], 0, 0, [0, -1]),
        }
        return GroupPreset(
            "psl2zi", ZI, gens, [CuspRep(((1, 0), (0, 0)), ["T", "U"])],
            relators=[("S", "S"), ("A", "A"), ("S", "T", "S", "T", "S", "T"),
                      ("S", "A", "S", "A"), ("T", "A", "T", "A"), ("U", "A", "U", "A")],
            commutations=[("T", "U")])
    raise UnknownPreset(name)


def load_custom_group(source) -> GroupPreset:
    """Read a custom generating set from a JSON document (path, str or dict).

    Schema::

        {"name": "...", "ring": "Z" | "Z[i]",
         "generators": {"S": [[0, -1], [1, 0]], "U": [[1, [0, 1]], [0, 1]], ...},
         "cusps": [{"fixed_point": "inf" | int | [re, im], "stabilizer": ["T", "U"]}]}
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        doc = json.loads(text)
    ring_name = doc.get("ring")
    gens_doc = doc.get("generators")
    if not isinstance(gens_doc, dict) or not gens_doc:
        raise GroupSpecError("'generators' must be a non-empty object")
    if ring_name is None:
        gauss = any(isinstance(v, list) for m in gens_doc.values() for row in m for v in row)
        ring = ZI if gauss else ZZ
    elif ring_name in ("Z", "ZZ"):
        ring = ZZ
    elif ring_name in ("Z[i]", "ZI"):
        ring = ZI
    else:
        raise GroupSpecError(f"unsupported ring {ring_name!r}")
    gens = {}
    for lab, m in gens_doc.items():
        if "^" in lab or "*" in lab:
            raise GroupSpecError(f"generator label {lab!r} may not contain '^' or '*'")
        try:
            gens[lab] = GroupElement.from_entries(m, ring)
        except (ValueError, TypeError) as exc:
            raise GroupSpecError(f"generator {lab}: {exc}") from None
    cusps = []
    for c in doc.get("cusps", [{"fixed_point": "inf", "stabilizer": []}]):
        fp = c.get("fixed_point", "inf")
        if fp == "inf":
            pt = (ring.one, ring.zero)
        else:
            pt = (ring.parse(fp), ring.one)
        stab = list(c.get("stabilizer", []))
        for lab in stab:
            if lab not in gens:
                raise GroupSpecError(f"stabilizer generator {lab!r} not among generators")
        cusps.append(CuspRep(pt, stab))
    g = GroupPreset(doc.get("name", "custom"), ring, gens, cusps)
    bad = [k for k, ok in g.relator_check().items() if not ok]
    if bad:
        raise GroupSpecError(f"cusp data inconsistent: {bad}")
    return g


def ambient_preset(group: GroupPreset) -> GroupPreset:
    """The built-in lattice whose horoball collection a group uses."""
    return preset("psl2z" if group.ring is ZZ else "psl2zi")


# ---------------------------------------------------------------------------
# Word metric
# ---------------------------------------------------------------------------


class _Ball:
    def __init__(self, gens: Sequence[GroupElement]):
        self.gens = list(gens)
        ident = GroupElement.identity(self.gens[0].ring)
        self.dist = {ident: 0}
        self.frontier = [ident]
        self.radius = 0
        self.sizes = [1]
        self.lock = threading.Lock()

    def grow_to(self, radius: int):
        with self.lock:
            while self.radius < radius:
                nxt = []
                r = self.radius + 1
                for g in self.frontier:
                    for s in self.gens:
                        h = g * s
                        if h not in self.dist:
                            self.dist[h] = r
                            nxt.append(h)
                self.frontier = nxt
                self.radius = r
                self.sizes.append(self.sizes[-1] + len(nxt))


_BALLS: Dict[Tuple, _Ball] = {}
_BALLS_LOCK = threading.Lock()


def _ball_for(gens: Sequence[GroupElement]) -> _Ball:
    key = tuple(sorted(set(gens), key=repr))
    with _BALLS_LOCK:
        ball = _BALLS.get(key)
        if ball is None:
            ball = _Ball(key)
            _BALLS[key] = ball
    return ball


def symmetric_closure(gens: Iterable[GroupElement]) -> List[GroupElement]:
    out = []
    for g in gens:
        for h in (g, inverse(g)):
            if h not in out:
                out.append(h)
    return out


def word_length(g: GroupElement, gens: Sequence[GroupElement], max_radius: int) -> int:
    """Cayley-graph distance from the identity, searched breadth-first."""
    ball = _ball_for(symmetric_closure(gens))
    for r in range(max_radius + 1):
        if r > ball.radius:
            ball.grow_to(r)
        d = ball.dist.get(g)
        if d is not None and d <= max_radius:
            return d
    raise NotFound(f"element not within radius {max_radius}")


def ball_sizes(gens: Sequence[GroupElement], radius: int) -> List[int]:
    ball = _ball_for(symmetric_closure(gens))
    ball.grow_to(radius)
    return ball.sizes[: radius + 1]


def ball_elements(gens: Sequence[GroupElement], radius: int) -> Dict[GroupElement, int]:
    ball = _ball_for(symmetric_closure(gens))
    ball.grow_to(radius)
    return {g: d for g, d in ball.dist.items() if d <= radius}


# ---------------------------------------------------------------------------
# Reduction into the standard fundamental domain
# ---------------------------------------------------------------------------


def reduce_point(ring, z: complex, y: float, max_iter: int = 10_000):
    """Move (z, y) into the standard fundamental domain.

    Returns ``(z, y, moves)``; each move is ``("T", n)`` (translate by -n)
    or ``("S", None)``.  The moves m_1..m_k satisfy
    reduced = m_k ... m_1 (z, y).
    """
    moves = []
    for _ in range(max_iter):
        n = ring.nearest(z)
        if not ring.is_zero(n):
            z = z - complex(*ring.parts(n))
            moves.append(("T", n))
        rho2 = z.real * z.real + z.imag * z.imag + y * y
        if rho2 < 1.0 - 1e-13:
            z = -z.conjugate() / rho2
            y = y / rho2
            moves.append(("S", None))
        else:
            return z, y, moves
    raise RuntimeError("fundamental-domain reduction did not terminate")


def reduce_point_exact(ring, zr: Fraction, zi: Fraction, y2: Fraction, max_iter: int = 100_000):
    """Exact version of :func:`reduce_point` on rational data.

    The height enters only through its square ``y2``.
    """
    moves = []
    for _ in range(max_iter):
        n = ring.nearest_fraction(zr, zi)
        nr, ni = ring.parts(n)
        if nr or ni:
            zr -= nr
            zi -= ni
            moves.append(("T", n))
        rho2 = zr * zr + zi * zi + y2
        if rho2 < 1:
            zr, zi = -zr / rho2, zi / rho2
            y2 = y2 / (rho2 * rho2)
            moves.append(("S", None))
        else:
            return zr, zi, y2, moves
    raise RuntimeError("exact reduction did not terminate")


def move_matrix(ring, move) -> GroupElement:
    kind, n = move
    if kind == "T":
        return GroupElement(ring.one, ring.neg(n), ring.zero, ring.one, ring)
    return GroupElement(ring.zero, ring.neg(ring.one), ring.one, ring.zero, ring)


# ---------------------------------------------------------------------------
# Thick distance vs word length
# ---------------------------------------------------------------------------


def thick_word_comparison(g: GroupElement, base, gens: Sequence[GroupElement],
                          collection, max_radius: int = 8):
    """Pair d_thick(x, g x) with the word length of g."""
    from .excursion import thick_distance
    from .hypgeom import mobius_apply_interior, Isometry

    n = word_length(g, gens, max_radius)
    gx = mobius_apply_interior(Isometry.from_group_element(g), base)
    return thick_distance(base, gx, collection), n


def fit_comparability_constant(pairs: Sequence[Tuple[float, int]]) -> float:
    """Smallest C with ||g||/C - C <= d_thick <= C ||g|| + C for all pairs."""
    lo, hi = 1.0, 1.0

    def ok(C):
        return all(n / C - C <= d + 1e-12 and d <= C * n + C + 1e-12 for d, n in pairs)

    while not ok(hi):
        hi *= 2.0
    if ok(lo):
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def gaussian_round_half(x: float) -> int:
    return int(math.floor(x + 0.5))
