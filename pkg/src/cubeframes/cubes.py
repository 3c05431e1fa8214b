"""Morphism calculus for semi-cube categories and the augmented semi-simplex base.

Objects of the cube categories are the powers ``I^n`` of an interval,
identified with natural numbers.  A morphism ``I^n -> I^m`` is stored as a
vector of ``m`` output assignments: each output coordinate is either a
constant endpoint (``0`` or ``1``) or a signed input coordinate, and every
input coordinate is used exactly once.  Composition, tensor, enumeration and
factorization are all exact on this normal form.

Entry encoding (one small int per output coordinate):

* ``0`` / ``1``             -- constant endpoint 0 / 1
* ``2*i``   (``i >= 1``)    -- input coordinate ``i``
* ``2*i+1`` (``i >= 1``)    -- reversed input coordinate ``1 - t_i``

The total order ``0 < 1 < 2 < 3 < ...`` on entries is the fixture order used
everywhere: endpoint 0, endpoint 1, then axis 1 straight, axis 1 reversed,
axis 2 straight, and so on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator


class ShapeError(ValueError):
    """Raised when domains and codomains do not line up."""


# ---------------------------------------------------------------------------
# Augmented semi-simplex category: objects [n] for n >= -1, morphisms are
# strictly increasing maps {0..dom} -> {0..cod}.
# ---------------------------------------------------------------------------


class SimplexMor:
    __slots__ = ("dom", "cod", "image", "_h")

    def __init__(self, dom: int, cod: int, image: tuple[int, ...]):
        image = tuple(image)
        if dom < -1 or cod < -1:
            raise ShapeError(f"bad simplex objects [{dom}] -> [{cod}]")
        if len(image) != dom + 1:
            raise ShapeError(f"image length {len(image)} != dom+1 = {dom + 1}")
        if any(not 0 <= v <= cod for v in image):
            raise ShapeError(f"image {image} out of range for cod [{cod}]")
        if any(a >= b for a, b in zip(image, image[1:])):
            raise ShapeError(f"image {image} not strictly increasing")
        self.dom = dom
        self.cod = cod
        self.image = image
        self._h = hash((dom, cod, image))

    def __eq__(self, other):
        return (
            isinstance(other, SimplexMor)
            and self.dom == other.dom
            and self.cod == other.cod
            and self.image == other.image
        )

    def __hash__(self):
        return self._h

    @property
    def is_identity(self) -> bool:
        return self.dom == self.cod

    def __repr__(self):
        return f"SimplexMor([{self.dom}]->[{self.cod}], {list(self.image)})"


def simplex_identity(n: int) -> SimplexMor:
    return SimplexMor(n, n, tuple(range(n + 1)))


def simplex_compose(k2: SimplexMor, k1: SimplexMor) -> SimplexMor:
    """Composite ``k2 . k1`` for k1: [a]->[b], k2: [b]->[c]."""
    if k1.cod != k2.dom:
        raise ShapeError(f"cannot compose [{k2.dom}]->[{k2.cod}] after [{k1.dom}]->[{k1.cod}]")
    return SimplexMor(k1.dom, k2.cod, tuple(k2.image[v] for v in k1.image))


def simplex_join(k1: SimplexMor, k2: SimplexMor) -> SimplexMor:
    """Monoidal join: [a] * [b] = [a+b+1], images concatenated with shift."""
    shift = k1.cod + 1
    return SimplexMor(
        k1.dom + k2.dom + 1,
        k1.cod + k2.cod + 1,
        k1.image + tuple(v + shift for v in k2.image),
    )


def simplex_homs(dom: int, cod: int) -> tuple[SimplexMor, ...]:
    """All strictly increasing maps [dom] -> [cod], in lexicographic order."""
    if dom > cod:
        return ()
    return tuple(
        SimplexMor(dom, cod, img)
        for img in itertools.combinations(range(cod + 1), dom + 1)
    )


def simplex_factor(alpha: SimplexMor, target: SimplexMor) -> SimplexMor | None:
    """Unique k with ``alpha . k = target``, or None (alpha is injective)."""
    if alpha.cod != target.cod:
        return None
    pos = {v: i for i, v in enumerate(alpha.image)}
    picked = []
    for v in target.image:
        if v not in pos:
            return None
        picked.append(pos[v])
    return SimplexMor(target.dom, alpha.dom, tuple(picked))


# ---------------------------------------------------------------------------
# Cube morphisms.
# ---------------------------------------------------------------------------

FACE0 = 0
FACE1 = 1


def axis(i: int, sign: int = 1) -> int:
    """Entry for input coordinate ``i`` with sign +1 or -1."""
    if i < 1 or sign not in (1, -1):
        raise ShapeError(f"bad axis ({i}, {sign})")
    return 2 * i + (0 if sign == 1 else 1)


def entry_is_face(e: int) -> bool:
    return e < 2


def entry_axis(e: int) -> tuple[int, int]:
    """Decode an axis entry into (input index, sign)."""
    return e // 2, (1 if e % 2 == 0 else -1)


class CubeMor:
    __slots__ = ("dom", "entries", "_h")

    def __init__(self, dom: int, entries: tuple[int, ...]):
        entries = tuple(entries)
        seen = set()
        for e in entries:
            if e < 0:
                raise ShapeError(f"bad entry {e}")
            if e >= 2:
                i = e // 2
                if i in seen:
                    raise ShapeError(f"input coordinate {i} used twice")
                seen.add(i)
        if seen != set(range(1, dom + 1)):
            raise ShapeError(f"axis entries {sorted(seen)} do not cover inputs 1..{dom}")
        self.dom = dom
        self.entries = entries
        self._h = hash((dom, entries))

    def __eq__(self, other):
        return (
            isinstance(other, CubeMor)
            and self.dom == other.dom
            and self.entries == other.entries
        )

    def __hash__(self):
        return self._h

    @property
    def cod(self) -> int:
        return len(self.entries)

    @property
    def is_identity(self) -> bool:
        return self.dom == self.cod and all(
            e == 2 * (j + 1) for j, e in enumerate(self.entries)
        )

    @property
    def is_automorphism(self) -> bool:
        return self.dom == self.cod and all(e >= 2 for e in self.entries)

    @property
    def is_plain(self) -> bool:
        """No reversals and axes in increasing position order."""
        last = 0
        for e in self.entries:
            if e < 2:
                continue
            if e % 2:
                return False
            if e // 2 <= last:
                return False
            last = e // 2
        return True

    @property
    def is_zero_embedding(self) -> bool:
        """Plain with every constant entry equal to 0 (a padded monotone map)."""
        return self.is_plain and all(e != FACE1 for e in self.entries)

    def affine(self) -> "AffineMap":
        return AffineMap(self.dom, self.entries)

    def __repr__(self):
        return f"CubeMor({self.dom}->{self.cod}, {describe_entries(self.entries)})"


def describe_entries(entries: Iterable[int]) -> str:
    parts = []
    for e in entries:
        if e < 2:
            parts.append(str(e))
        else:
            i, s = entry_axis(e)
            parts.append(f"{'+' if s == 1 else '-'}t{i}")
    return "[" + ",".join(parts) + "]"


def cube_identity(n: int) -> CubeMor:
    return CubeMor(n, tuple(2 * i for i in range(1, n + 1)))


DELTA0 = CubeMor(0, (FACE0,))
DELTA1 = CubeMor(0, (FACE1,))
REVERSAL = CubeMor(1, (3,))
TRANSPOSITION = CubeMor(2, (4, 2))


def _compose_entries(g_entries, f_entries):
    out = []
    for e in g_entries:
        if e < 2:
            out.append(e)
            continue
        i, bit = e // 2, e % 2
        fe = f_entries[i - 1]
        if fe < 2:
            out.append(fe ^ bit)
        else:
            out.append((fe // 2) * 2 + ((fe % 2) ^ bit))
    return tuple(out)


def compose_cube(g: CubeMor, f: CubeMor) -> CubeMor:
    """Composite ``g . f`` for f: I^n -> I^k, g: I^k -> I^m."""
    if f.cod != g.dom:
        raise ShapeError(f"cannot compose {g.dom}->{g.cod} after {f.dom}->{f.cod}")
    return CubeMor(f.dom, _compose_entries(g.entries, f.entries))


def tensor_cube(f: CubeMor, g: CubeMor) -> CubeMor:
    """Juxtaposition f (x) g; g's input coordinates are shifted past f's."""
    shift = 2 * f.dom
    return CubeMor(
        f.dom + g.dom,
        f.entries + tuple(e if e < 2 else e + shift for e in g.entries),
    )


def enumerate_hom(n: int, m: int, symmetric: bool) -> tuple[CubeMor, ...]:
    """All morphisms I^n -> I^m, sorted lexicographically on entries.

    Plain mode restricts to positive axes in increasing order, so the counts
    are C(m,n)*2^(m-n) plain and C(m,n)*n!*2^m symmetric.
    """
    if n > m or n < 0:
        return ()
    out = []
    positions = range(m)
    for axis_pos in itertools.combinations(positions, n):
        face_pos = [j for j in positions if j not in axis_pos]
        if symmetric:
            axis_iter = (
                (perm, signs)
                for perm in itertools.permutations(range(1, n + 1))
                for signs in itertools.product((0, 1), repeat=n)
            )
        else:
            axis_iter = ((tuple(range(1, n + 1)), (0,) * n),)
        for perm, signs in axis_iter:
            base = [0] * m
            for slot, i, bit in zip(axis_pos, perm, signs):
                base[slot] = 2 * i + bit
            for faces in itertools.product((0, 1), repeat=len(face_pos)):
                ent = list(base)
                for slot, v in zip(face_pos, faces):
                    ent[slot] = v
                out.append(CubeMor(n, tuple(ent)))
    out.sort(key=lambda c: c.entries)
    return tuple(out)


def hom_size(n: int, m: int, symmetric: bool) -> int:
    if n > m or n < 0:
        return 0
    if symmetric:
        import math

        return comb(m, n) * math.factorial(n) * 2**m
    return comb(m, n) * 2 ** (m - n)


def automorphisms(m: int) -> tuple[CubeMor, ...]:
    return enumerate_hom(m, m, symmetric=True)


# ---------------------------------------------------------------------------
# The padded-monotone embedding of the semi-simplex base and its factorization.
# ---------------------------------------------------------------------------


def cube_of_simplex(k: SimplexMor) -> CubeMor:
    """Monotone cube morphism of a simplex injection: [n] goes to I^(n+1).

    Output position j carries the next input axis when j lies in the image
    of k, and the constant endpoint 0 otherwise.
    """
    entries = []
    rank = 0
    img = set(k.image)
    for j in range(k.cod + 1):
        if j in img:
            rank += 1
            entries.append(2 * rank)
        else:
            entries.append(FACE0)
    return CubeMor(k.dom + 1, tuple(entries))


def simplex_of_cube(f: CubeMor) -> SimplexMor:
    """Inverse of :func:`cube_of_simplex` on padded monotone morphisms."""
    if not f.is_zero_embedding:
        raise ShapeError(f"{f!r} is not a padded monotone morphism")
    image = tuple(j for j, e in enumerate(f.entries) if e >= 2)
    return SimplexMor(f.dom - 1, f.cod - 1, image)


def factor_zero_embedding(f: CubeMor) -> tuple[CubeMor, SimplexMor]:
    """Write ``f = w . cube_of_simplex(k)`` with ``w`` an automorphism.

    The embedding part carries the input axes on the first ``dom`` output
    slots; the automorphism routes them to their real positions and turns
    endpoint-1 constants into reversed spare coordinates, consumed in output
    position order.  Padded monotone inputs are already factored and come
    back unchanged with ``w`` the identity.
    """
    if f.is_zero_embedding:
        return cube_identity(f.cod), simplex_of_cube(f)
    n, m = f.dom, f.cod
    k = SimplexMor(n - 1, m - 1, tuple(range(n)))
    w_entries = []
    spare = n
    for e in f.entries:
        if e >= 2:
            w_entries.append(e)
        else:
            spare += 1
            w_entries.append(2 * spare + (1 if e == FACE1 else 0))
    w = CubeMor(m, tuple(w_entries))
    return w, k


# ---------------------------------------------------------------------------
# Affine-map semantics.  Same entry language without the bijectivity demand;
# used as an independent oracle by evaluating on the corners of the cube.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    dom: int
    outs: tuple[int, ...]

    def evaluate(self, point: tuple) -> tuple:
        vals = []
        for e in self.outs:
            if e < 2:
                vals.append(e)
            else:
                i, s = entry_axis(e)
                t = point[i - 1]
                vals.append(t if s == 1 else 1 - t)
        return tuple(vals)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """Substitution ``self . other``."""
        if other.outs is not None and len(other.outs) != self.dom:
            raise ShapeError("affine composition shape mismatch")
        return AffineMap(other.dom, _compose_entries(self.outs, other.outs))

    def tensor(self, other: "AffineMap") -> "AffineMap":
        shift = 2 * self.dom
        return AffineMap(
            self.dom + other.dom,
            self.outs + tuple(e if e < 2 else e + shift for e in other.outs),
        )

    def corner_table(self) -> tuple:
        """Values on every 0/1 corner; a faithful fingerprint of the map."""
        return tuple(
            self.evaluate(pt) for pt in itertools.product((0, 1), repeat=self.dom)
        )


# ---------------------------------------------------------------------------
# Generator layers and word closure: the independent route to the hom-sets.
# A layer is a tensor product of the atoms below; hom-sets are recovered by
# closing identities under composition with layers.
# ---------------------------------------------------------------------------

_ATOMS_SYMMETRIC = (DELTA0, DELTA1, REVERSAL, TRANSPOSITION)
_ATOMS_PLAIN = (DELTA0, DELTA1)


def generator_layers(max_dim: int, symmetric: bool) -> tuple[CubeMor, ...]:
    """All tensor products of generating atoms and identities up to max_dim."""
    atoms = list(_ATOMS_SYMMETRIC if symmetric else _ATOMS_PLAIN)
    atoms.append(cube_identity(1))
    layers = {(): cube_identity(0)}
    frontier = [cube_identity(0)]
    out = set()
    while frontier:
        new = []
        for base in frontier:
            for a in atoms:
                if base.cod + a.cod > max_dim or base.dom + a.dom > max_dim:
                    continue
                t = tensor_cube(base, a)
                if t not in out:
                    out.add(t)
                    new.append(t)
        frontier = new
    out.add(cube_identity(0))
    return tuple(sorted(out, key=lambda c: (c.dom, c.cod, c.entries)))


def word_closure(n: int, max_dim: int, symmetric: bool) -> dict[int, set[CubeMor]]:
    """Every composite of generator layers out of I^n, grouped by codomain."""
    layers_by_dom: dict[int, list[CubeMor]] = {}
    for layer in generator_layers(max_dim, symmetric):
        layers_by_dom.setdefault(layer.dom, []).append(layer)
    reached: dict[int, set[CubeMor]] = {n: {cube_identity(n)}}
    frontier = [cube_identity(n)]
    while frontier:
        new = []
        for f in frontier:
            for layer in layers_by_dom.get(f.cod, ()):
                g = compose_cube(layer, f)
                bucket = reached.setdefault(g.cod, set())
                if g not in bucket:
                    bucket.add(g)
                    new.append(g)
        frontier = new
    return reached


def words_up_to(n: int, length: int, max_dim: int, symmetric: bool) -> Iterator[tuple[CubeMor, ...]]:
    """All composable generator-layer words out of I^n with at most ``length`` letters."""
    layers_by_dom: dict[int, list[CubeMor]] = {}
    for layer in generator_layers(max_dim, symmetric):
        layers_by_dom.setdefault(layer.dom, []).append(layer)

    def extend(word: tuple[CubeMor, ...], cod: int, budget: int):
        yield word
        if budget == 0:
            return
        for layer in layers_by_dom.get(cod, ()):
            yield from extend(word + (layer,), layer.cod, budget - 1)

    yield from extend((), n, length)


def evaluate_word(n: int, word: tuple[CubeMor, ...]) -> CubeMor:
    acc = cube_identity(n)
    for letter in word:
        acc = compose_cube(letter, acc)
    return acc


# ---------------------------------------------------------------------------
# JSON encoding.
# ---------------------------------------------------------------------------


def cube_to_json(f: CubeMor) -> dict:
    entries = []
    for e in f.entries:
        if e < 2:
            entries.append({"face": e})
        else:
            i, s = entry_axis(e)
            entries.append({"axis": i, "sign": s})
    return {"dom": f.dom, "cod": f.cod, "entries": entries}


def cube_from_json(data: dict) -> CubeMor:
    entries = []
    for item in data["entries"]:
        if "face" in item:
            entries.append(int(item["face"]))
        else:
            entries.append(axis(int(item["axis"]), int(item["sign"])))
    f = CubeMor(int(data["dom"]), tuple(entries))
    if f.cod != int(data["cod"]):
        raise ShapeError("cod field does not match entry count")
    return f


def simplex_to_json(k: SimplexMor) -> dict:
    return {"dom": k.dom, "cod": k.cod, "image": list(k.image)}


def simplex_from_json(data: dict) -> SimplexMor:
    return SimplexMor(int(data["dom"]), int(data["cod"]), tuple(int(v) for v in data["image"]))


def cube_name(f: CubeMor) -> str:
    """Compact stable name, used as a JSON key."""
    return f"{f.dom}>{'.'.join(str(e) for e in f.entries)}" if f.entries else f"{f.dom}>"
