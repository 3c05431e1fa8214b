"""Finite set-valued presheaves over a presented base category.

A ``BaseCategory`` is a finite category given by explicit hom and composition
tables plus a degree per object.  Two modes are supported: ``direct`` (every
nonidentity arrow strictly raises degree) and ``ez`` (arrows weakly raise
degree and degree-preserving arrows are isomorphisms).  Presheaves store one
finite element tuple per object and one function per nonidentity arrow, and
everything downstream (boundaries, skeletal filtrations, natural
transformation sets, convolution products, Kan extensions) is computed by
explicit finite constructions that revalidate their own output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .cubes import (
    CubeMor,
    compose_cube,
    cube_identity,
    cube_name,
    enumerate_hom,
    tensor_cube,
)


class BaseMismatchError(ValueError):
    pass


class TruncationError(RuntimeError):
    pass


class TensorUndefinedError(RuntimeError):
    """Tensor of two arrows does not exist in a partially monoidal base."""


# ---------------------------------------------------------------------------
# Base categories.
# ---------------------------------------------------------------------------


class BaseCategory:
    def __init__(
        self,
        name: str,
        mode: str,
        objects: tuple,
        deg: dict,
        homs: dict,
        dom: dict,
        cod: dict,
        identity: dict,
        compose: dict,
        tensor_obj: Optional[Callable] = None,
        tensor_arr: Optional[Callable] = None,
        unit=None,
        obj_name: Optional[Callable] = None,
        arr_name: Optional[Callable] = None,
    ):
        assert mode in ("direct", "ez")
        self.name = name
        self.mode = mode
        self.objects = tuple(objects)
        self.deg = deg
        self.homs = homs
        self.dom = dom
        self.cod = cod
        self.identity = identity
        self.compose_table = compose
        self.tensor_obj = tensor_obj
        self.tensor_arr = tensor_arr
        self.unit = unit
        self._obj_name = obj_name or str
        self._arr_name = arr_name or str
        self._obj_index = {x: i for i, x in enumerate(self.objects)}
        self._objects_by_deg = sorted(
            self.objects, key=lambda x: (self.deg[x], self._obj_index[x])
        )

    # -- lookups ------------------------------------------------------------

    def hom(self, x, y) -> tuple:
        return self.homs.get((x, y), ())

    def arrows(self) -> Iterable:
        idx = self._obj_index
        for pair in sorted(self.homs, key=lambda p: (idx[p[0]], idx[p[1]])):
            yield from self.homs[pair]

    def nonidentity_arrows(self) -> Iterable:
        for a in self.arrows():
            if not self.is_identity(a):
                yield a

    def is_identity(self, a) -> bool:
        return a == self.identity[self.dom[a]]

    def comp(self, g, f):
        """Composite g . f for f: x->y, g: y->z."""
        if self.is_identity(g):
            return f
        if self.is_identity(f):
            return g
        return self.compose_table[(g, f)]

    def arrows_into(self, x) -> tuple:
        return tuple(a for y in self.objects for a in self.hom(y, x))

    def objects_by_degree(self) -> tuple:
        return tuple(self._objects_by_deg)

    def object_name(self, x) -> str:
        return self._obj_name(x)

    def arrow_name(self, a) -> str:
        return self._arr_name(a)

    def object_by_name(self, s: str):
        for x in self.objects:
            if self._obj_name(x) == s:
                return x
        raise KeyError(s)

    def arrow_by_name(self, s: str):
        for a in self.arrows():
            if self._arr_name(a) == s:
                return a
        raise KeyError(s)

    # -- validation -----------------------------------------------------------

    def validate(self, assoc: str = "full"):
        for x in self.objects:
            i = self.identity[x]
            assert self.dom[i] == x and self.cod[i] == x
        for (x, y), arrows in self.homs.items():
            for a in arrows:
                assert self.dom[a] == x and self.cod[a] == y, (a, x, y)
        for f in self.arrows():
            for z in self.objects:
                for g in self.hom(self.cod[f], z):
                    gf = self.comp(g, f)
                    assert self.dom[gf] == self.dom[f] and self.cod[gf] == z
                    assert gf in set(self.hom(self.dom[f], z)), (g, f)
        if assoc != "none":
            triples = self._composable_triples(sample=(assoc == "sample"))
            for h, g, f in triples:
                assert self.comp(h, self.comp(g, f)) == self.comp(self.comp(h, g), f)
        for a in self.nonidentity_arrows():
            dx, dy = self.deg[self.dom[a]], self.deg[self.cod[a]]
            if self.mode == "direct":
                assert dx < dy, f"nonidentity arrow {a} does not raise degree"
            else:
                assert dx <= dy
                if dx == dy:
                    assert any(
                        self.comp(b, a) == self.identity[self.dom[a]]
                        and self.comp(a, b) == self.identity[self.cod[a]]
                        for b in self.hom(self.cod[a], self.dom[a])
                    ), f"degree-preserving arrow {a} is not invertible"

    def _composable_triples(self, sample: bool):
        out = []
        arrows = list(self.nonidentity_arrows())
        step = 7 if sample and len(arrows) > 60 else 1
        for idx, f in enumerate(arrows):
            if idx % step:
                continue
            for g in (a for a in arrows if self.dom[a] == self.cod[f]):
                for h in (a for a in arrows if self.dom[a] == self.cod[g]):
                    out.append((h, g, f))
        return out


def _cube_tensor_obj(max_deg):
    def t(x, y):
        return x + y if x + y <= max_deg else None

    return t


def cube_base(max_deg: int, symmetric: bool) -> BaseCategory:
    """The semi-cube category on objects I^0 .. I^max_deg."""
    objects = tuple(range(max_deg + 1))
    homs = {}
    dom, cod = {}, {}
    for x in objects:
        for y in objects:
            arrows = enumerate_hom(x, y, symmetric)
            if arrows:
                homs[(x, y)] = arrows
                for a in arrows:
                    dom[a], cod[a] = x, y
    compose = {}
    for (x, y), fs in homs.items():
        for (y2, z), gs in homs.items():
            if y2 != y:
                continue
            for f in fs:
                for g in gs:
                    compose[(g, f)] = compose_cube(g, f)
    return BaseCategory(
        name="cube-sym" if symmetric else "cube-plain",
        mode="ez" if symmetric else "direct",
        objects=objects,
        deg={x: x for x in objects},
        homs=homs,
        dom=dom,
        cod=cod,
        identity={x: cube_identity(x) for x in objects},
        compose=compose,
        tensor_obj=_cube_tensor_obj(max_deg),
        tensor_arr=lambda f, g: tensor_cube(f, g) if f.cod + g.cod <= max_deg else None,
        unit=0,
        obj_name=lambda x: f"I^{x}",
        arr_name=cube_name,
    )


def simplex_base(max_deg: int) -> BaseCategory:
    """Augmented semi-simplex objects [-1] .. [max_deg-1]; deg([n]) = n+1."""
    from .cubes import simplex_compose, simplex_homs, simplex_identity, simplex_join

    objects = tuple(range(-1, max_deg))
    homs = {}
    dom, cod = {}, {}
    for x in objects:
        for y in objects:
            arrows = simplex_homs(x, y)
            if arrows:
                homs[(x, y)] = arrows
                for a in arrows:
                    dom[a], cod[a] = x, y
    compose = {}
    for (x, y), fs in homs.items():
        for z in objects:
            for g in homs.get((y, z), ()):
                for f in fs:
                    compose[(g, f)] = simplex_compose(g, f)
    return BaseCategory(
        name="simplex",
        mode="direct",
        objects=objects,
        deg={x: x + 1 for x in objects},
        homs=homs,
        dom=dom,
        cod=cod,
        identity={x: simplex_identity(x) for x in objects},
        compose=compose,
        tensor_obj=lambda x, y: x + y + 1 if x + y + 1 < max_deg else None,
        tensor_arr=lambda f, g: simplex_join(f, g) if f.cod + g.cod + 1 < max_deg else None,
        unit=-1,
        obj_name=lambda x: f"[{x}]",
        arr_name=lambda a: f"s{a.dom}>{a.cod}:{','.join(map(str, a.image))}",
    )


def standard_base(name: str, max_deg: int) -> BaseCategory:
    if name == "cube-plain":
        return cube_base(max_deg, symmetric=False)
    if name == "cube-sym":
        return cube_base(max_deg, symmetric=True)
    if name == "simplex":
        return simplex_base(max_deg)
    if name == "dr":
        from .dr import build_dr

        return build_dr(max_deg)
    raise KeyError(f"unknown base {name!r}")


# ---------------------------------------------------------------------------
# Presheaves and their maps.
# ---------------------------------------------------------------------------


class Presheaf:
    def __init__(self, base: BaseCategory, levels: dict, action: dict, label: str = ""):
        self.base = base
        self.levels = {x: tuple(levels.get(x, ())) for x in base.objects}
        self.action = action  # nonidentity arrow -> {elem of cod level: elem of dom level}
        self.label = label

    def level(self, x) -> tuple:
        return self.levels[x]

    def act(self, arrow, elem):
        if self.base.is_identity(arrow):
            return elem
        return self.action[arrow][elem]

    def total_size(self) -> int:
        return sum(len(v) for v in self.levels.values())

    def elements(self):
        for x in self.base.objects_by_degree():
            for e in self.levels[x]:
                yield x, e

    def validate(self):
        base = self.base
        for a in base.nonidentity_arrows():
            table = self.action.get(a, {})
            src = self.levels[base.cod[a]]
            dst = set(self.levels[base.dom[a]])
            assert set(table) == set(src), f"action of {a} not total"
            assert all(v in dst for v in table.values()), f"action of {a} escapes level"
        for f in base.nonidentity_arrows():
            y = base.cod[f]
            for z in base.objects:
                for g in base.hom(y, z):
                    if base.is_identity(g):
                        continue
                    gf = base.comp(g, f)
                    for e in self.levels[z]:
                        assert self.act(gf, e) == self.act(f, self.act(g, e)), (
                            f"contravariant functoriality fails on {g} . {f}"
                        )

    def same_levels(self, other: "Presheaf") -> bool:
        return all(self.levels[x] == other.levels[x] for x in self.base.objects)

    def relabel(self) -> tuple["Presheaf", dict]:
        """Replace elements by dense integer ids (per level, in order)."""
        trans = {
            x: {e: i for i, e in enumerate(self.levels[x])} for x in self.base.objects
        }
        levels = {x: tuple(range(len(self.levels[x]))) for x in self.base.objects}
        action = {}
        for a, table in self.action.items():
            x, y = self.base.dom[a], self.base.cod[a]
            action[a] = {trans[y][e]: trans[x][v] for e, v in table.items()}
        return Presheaf(self.base, levels, action, self.label), trans

    def __repr__(self):
        sizes = {self.base.object_name(x): len(self.levels[x]) for x in self.base.objects}
        return f"Presheaf<{self.label or 'anon'} {sizes}>"


class PresheafMap:
    def __init__(self, source: Presheaf, target: Presheaf, components: dict):
        if source.base is not target.base:
            raise BaseMismatchError("presheaf map across different bases")
        self.source = source
        self.target = target
        self.components = {x: dict(components.get(x, {})) for x in source.base.objects}

    @property
    def base(self):
        return self.source.base

    def at(self, x, e):
        return self.components[x][e]

    @property
    def is_mono(self) -> bool:
        return all(
            len(set(c.values())) == len(c) for c in self.components.values()
        )

    def validate(self):
        base = self.base
        for x in base.objects:
            comp = self.components[x]
            assert set(comp) == set(self.source.levels[x])
            tgt = set(self.target.levels[x])
            assert all(v in tgt for v in comp.values())
        for a in base.nonidentity_arrows():
            x, y = base.dom[a], base.cod[a]
            for e in self.source.levels[y]:
                assert self.at(x, self.source.act(a, e)) == self.target.act(a, self.at(y, e)), (
                    f"naturality fails at {a}"
                )

    def then(self, other: "PresheafMap") -> "PresheafMap":
        assert self.target is other.source or self.target.same_levels(other.source)
        comps = {
            x: {e: other.components[x][v] for e, v in self.components[x].items()}
            for x in self.base.objects
        }
        return PresheafMap(self.source, other.target, comps)

    def key(self) -> tuple:
        return tuple(
            (self.base.object_name(x), tuple(sorted(self.components[x].items(), key=repr)))
            for x in self.base.objects
        )


def identity_map(P: Presheaf) -> PresheafMap:
    return PresheafMap(P, P, {x: {e: e for e in P.levels[x]} for x in P.base.objects})


def empty_presheaf(base: BaseCategory) -> Presheaf:
    return Presheaf(base, {}, {a: {} for a in base.nonidentity_arrows()}, "empty")


def terminal_presheaf(base: BaseCategory) -> Presheaf:
    levels = {x: ("*",) for x in base.objects}
    action = {a: {"*": "*"} for a in base.nonidentity_arrows()}
    return Presheaf(base, levels, action, "terminal")


# ---------------------------------------------------------------------------
# Representables and boundaries.
# ---------------------------------------------------------------------------


def representable(base: BaseCategory, x) -> Presheaf:
    levels = {y: base.hom(y, x) for y in base.objects}
    action = {}
    for f in base.nonidentity_arrows():
        yp, y = base.dom[f], base.cod[f]
        action[f] = {a: base.comp(a, f) for a in base.hom(y, x)}
    return Presheaf(base, levels, action, f"yoneda({base.object_name(x)})")


def factors_through_lower(base: BaseCategory, a) -> bool:
    """Does a: y -> x factor through an object of degree < deg(x)?"""
    x = base.cod[a]
    y = base.dom[a]
    dx = base.deg[x]
    if base.deg[y] < dx:
        return True
    for z in base.objects:
        if base.deg[z] >= dx:
            continue
        for g in base.hom(y, z):
            for h in base.hom(z, x):
                if base.comp(h, g) == a:
                    return True
    return False


def boundary(base: BaseCategory, x) -> tuple[Presheaf, PresheafMap]:
    """The subpresheaf of the representable at x of maps factoring below x."""
    if x not in base.deg:
        raise KeyError(f"unknown object {x!r}")
    rep = representable(base, x)
    keep = {y: tuple(a for a in rep.levels[y] if factors_through_lower(base, a)) for y in base.objects}
    action = {}
    for f in base.nonidentity_arrows():
        y = base.cod[f]
        action[f] = {a: base.comp(a, f) for a in keep[y]}
    sub = Presheaf(base, keep, action, f"boundary({base.object_name(x)})")
    incl = PresheafMap(sub, rep, {y: {a: a for a in keep[y]} for y in base.objects})
    return sub, incl


# ---------------------------------------------------------------------------
# Subpresheaves, unions, pushouts.
# ---------------------------------------------------------------------------


def subpresheaf(P: Presheaf, chosen: dict, label="sub") -> tuple[Presheaf, PresheafMap]:
    """The subpresheaf on the given elements (must be action-closed)."""
    levels = {x: tuple(e for e in P.levels[x] if e in chosen.get(x, ())) for x in P.base.objects}
    action = {}
    for a in P.base.nonidentity_arrows():
        y = P.base.cod[a]
        table = {}
        for e in levels[y]:
            v = P.act(a, e)
            if v not in set(levels[P.base.dom[a]]):
                raise ValueError("chosen elements are not closed under the action")
            table[e] = v
        action[a] = table
    S = Presheaf(P.base, levels, action, label)
    incl = PresheafMap(S, P, {x: {e: e for e in levels[x]} for x in P.base.objects})
    return S, incl


def close_under_action(P: Presheaf, seed: dict) -> dict:
    chosen = {x: set(seed.get(x, ())) for x in P.base.objects}
    changed = True
    while changed:
        changed = False
        for a in P.base.nonidentity_arrows():
            x, y = P.base.dom[a], P.base.cod[a]
            for e in list(chosen[y]):
                v = P.act(a, e)
                if v not in chosen[x]:
                    chosen[x].add(v)
                    changed = True
    return {x: tuple(e for e in P.levels[x] if e in chosen[x]) for x in P.base.objects}


def image_subpresheaf(m: PresheafMap) -> dict:
    return {x: tuple(dict.fromkeys(m.components[x].values())) for x in m.base.objects}


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, a):
        self.parent.setdefault(a, a)

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def coproduct(ps: list[Presheaf], label="coprod") -> tuple[Presheaf, list[PresheafMap]]:
    base = ps[0].base
    levels = {
        x: tuple((i, e) for i, P in enumerate(ps) for e in P.levels[x]) for x in base.objects
    }
    action = {
        a: {(i, e): (i, ps[i].act(a, e)) for (i, e) in levels[base.cod[a]]}
        for a in base.nonidentity_arrows()
    }
    C = Presheaf(base, levels, action, label)
    maps = [
        PresheafMap(P, C, {x: {e: (i, e) for e in P.levels[x]} for x in base.objects})
        for i, P in enumerate(ps)
    ]
    return C, maps


def pushout(f: PresheafMap, g: PresheafMap) -> tuple[Presheaf, PresheafMap, PresheafMap]:
    """Pushout of B <-f- A -g-> C, with the two inclusions."""
    A, B, C = f.source, f.target, g.target
    base = A.base
    uf = _UnionFind()
    for x in base.objects:
        for e in B.levels[x]:
            uf.add(("b", x, e))
        for e in C.levels[x]:
            uf.add(("c", x, e))
        for a in A.levels[x]:
            uf.union(("b", x, f.at(x, a)), ("c", x, g.at(x, a)))
    levels = {}
    for x in base.objects:
        seen = []
        for tag in [("b", x, e) for e in B.levels[x]] + [("c", x, e) for e in C.levels[x]]:
            r = uf.find(tag)
            if r not in seen:
                seen.append(r)
        levels[x] = tuple(seen)
    action = {}
    for a in base.nonidentity_arrows():
        x, y = base.dom[a], base.cod[a]
        table = {}
        for tag in levels[y]:
            kind, _, e = tag
            src = B if kind == "b" else C
            moved = (kind, x, src.act(a, e))
            table[tag] = uf.find(moved)
        # representatives of the same class must map consistently
        for tag2 in [("b", y, e) for e in B.levels[y]] + [("c", y, e) for e in C.levels[y]]:
            r = uf.find(tag2)
            kind, _, e = tag2
            src = B if kind == "b" else C
            moved = uf.find((kind, x, src.act(a, e)))
            assert table[r] == moved, "pushout action ill-defined"
        action[a] = table
    P = Presheaf(base, levels, action, "pushout")
    inB = PresheafMap(B, P, {x: {e: uf.find(("b", x, e)) for e in B.levels[x]} for x in base.objects})
    inC = PresheafMap(C, P, {x: {e: uf.find(("c", x, e)) for e in C.levels[x]} for x in base.objects})
    return P, inB, inC


# ---------------------------------------------------------------------------
# Skeleta and cell decompositions.
# ---------------------------------------------------------------------------


@dataclass
class Stage:
    degree: int
    cells: list  # (object, element of K at that object)
    pushout_verified: bool


@dataclass
class CellDecomposition:
    presheaf: Presheaf
    stages: list[Stage]
    skeleta: list[Presheaf]
    verified: bool


def sk_presheaf(K: Presheaf, n: int, label=None) -> Presheaf:
    base = K.base
    levels = {x: (K.levels[x] if base.deg[x] <= n else ()) for x in base.objects}
    action = {}
    for a in base.nonidentity_arrows():
        y = base.cod[a]
        action[a] = {e: K.act(a, e) for e in levels[y]}
    return Presheaf(base, levels, action, label or f"sk_{n}({K.label})")


def _verify_stage_pushout(base, prev: Presheaf, curr: Presheaf, cells, K: Presheaf) -> bool:
    """curr must be the pushout of prev along the cell boundaries."""
    if not cells:
        return all(prev.levels[x] == curr.levels[x] for x in base.objects)
    bs, reps, att_b, att_r = [], [], [], []
    for (x, e) in cells:
        b, incl = boundary(base, x)
        rep = representable(base, x)
        bs.append(b)
        reps.append(rep)
        att_b.append((b, x, e))
        att_r.append((rep, x, e))
    Bco, b_ins = coproduct(bs, "cells-boundary")
    Rco, r_ins = coproduct(reps, "cells-rep")
    incl_into_rep = PresheafMap(
        Bco,
        Rco,
        {
            x: {(i, a): (i, a) for (i, a) in Bco.levels[x]}
            for x in base.objects
        },
    )
    attach = PresheafMap(
        Bco,
        prev,
        {
            x: {(i, a): K.act(a, cells[i][1]) for (i, a) in Bco.levels[x]}
            for x in base.objects
        },
    )
    attach.validate()
    P, inRep, inPrev = pushout(incl_into_rep, attach)
    # canonical comparison P -> curr
    comp = {}
    ok = True
    for x in base.objects:
        table = {}
        for cls in P.levels[x]:
            found = None
            for (kind, _, e) in [t for t in _class_members(P, inPrev, inRep, x, cls)]:
                if kind == "b":
                    i, a = e
                    found = K.act(a, cells[i][1])
                else:
                    found = e
                break
            table[cls] = found
        comp[x] = table
        if sorted(map(repr, table.values())) != sorted(map(repr, curr.levels[x])):
            ok = False
    if not ok:
        return False
    cmp_map = PresheafMap(P, curr, comp)
    try:
        cmp_map.validate()
    except AssertionError:
        return False
    return all(len(set(comp[x].values())) == len(P.levels[x]) for x in base.objects)


def _class_members(P, inPrev, inRep, x, cls):
    for e, v in inRep.components[x].items():
        if v == cls:
            yield ("b", x, e)
    for e, v in inPrev.components[x].items():
        if v == cls:
            yield ("c", x, e)


def skeletal_filtration(K: Presheaf) -> CellDecomposition:
    """Degreewise exhaustion of K by cell attachments, each stage verified."""
    base = K.base
    if base.mode != "direct":
        raise ValueError("filtration requires a direct base")
    degrees = sorted({base.deg[x] for x in base.objects})
    stages, skeleta = [], []
    prev = empty_presheaf(base)
    verified = True
    for n in degrees:
        cells = [
            (x, e)
            for x in base.objects_by_degree()
            if base.deg[x] == n
            for e in K.levels[x]
        ]
        curr = sk_presheaf(K, n)
        ok = _verify_stage_pushout(base, prev, curr, cells, K)
        verified = verified and ok
        stages.append(Stage(n, cells, ok))
        skeleta.append(curr)
        prev = curr
    verified = verified and prev.same_levels(K)
    return CellDecomposition(K, stages, skeleta, verified)


def cell_decompose_mono(i: PresheafMap) -> CellDecomposition:
    """A relative cell structure for a monomorphism i : K -> L."""
    if not i.is_mono:
        raise ValueError("input map is not a monomorphism")
    base = i.base
    if base.mode != "direct":
        raise ValueError("cell decomposition requires a direct base")
    L = i.target
    img = {x: set(i.components[x].values()) for x in base.objects}
    degrees = sorted({base.deg[x] for x in base.objects})
    levels_prev = {
        x: tuple(e for e in L.levels[x] if e in img[x]) for x in base.objects
    }
    prev, _ = subpresheaf(L, levels_prev, "rel-stage")
    stages, skeleta = [], []
    verified = True
    for n in degrees:
        cells = [
            (x, e)
            for x in base.objects_by_degree()
            if base.deg[x] == n
            for e in L.levels[x]
            if e not in img[x]
        ]
        keep = {
            x: tuple(
                e
                for e in L.levels[x]
                if e in img[x] or base.deg[x] <= n
            )
            for x in base.objects
        }
        curr, _ = subpresheaf(L, keep, f"rel-stage-{n}")
        ok = _verify_stage_pushout(base, prev, curr, cells, L)
        verified = verified and ok
        stages.append(Stage(n, cells, ok))
        skeleta.append(curr)
        prev = curr
    verified = verified and prev.same_levels(L)
    return CellDecomposition(L, stages, skeleta, verified)


# ---------------------------------------------------------------------------
# Natural transformation sets.
# ---------------------------------------------------------------------------


def nat_set(K: Presheaf, F: Presheaf) -> tuple[PresheafMap, ...]:
    """Every natural transformation K -> F, in a deterministic order.

    Exact backtracking over single component values, always branching on the
    element with the fewest remaining candidates; naturality along each
    arrow is enforced in both directions as soon as either endpoint value is
    known.
    """
    if K.base is not F.base:
        raise BaseMismatchError("nat_set across different bases")
    base = K.base
    pairs = []
    pair_index = {}
    for x in base.objects_by_degree():
        for e in K.levels[x]:
            pair_index[(x, e)] = len(pairs)
            pairs.append((x, e))
    n = len(pairs)
    # naturality links: alpha_lower(K(h)(e)) = F(h)(alpha_higher(e))
    links_down = [[] for _ in range(n)]  # at higher pair: (lower pair, F-action of h)
    links_up = [[] for _ in range(n)]  # at lower pair: (higher pair, F-action of h)
    for h in base.nonidentity_arrows():
        y, x = base.dom[h], base.cod[h]
        ftab = F.action[h]
        for e in K.levels[x]:
            hi = pair_index[(x, e)]
            lo = pair_index[(y, K.act(h, e))]
            links_down[hi].append((lo, ftab))
            links_up[lo].append((hi, ftab))
    assign = [None] * n
    results = []

    def candidates(i):
        x, _ = pairs[i]
        cands = None
        for lo, ftab in links_down[i]:
            if assign[lo] is not None:
                filtered = [v for v in (cands if cands is not None else F.levels[x]) if ftab[v] == assign[lo]]
                cands = filtered
                if not cands:
                    return []
        for hi, ftab in links_up[i]:
            if assign[hi] is not None:
                forced = ftab[assign[hi]]
                if cands is None:
                    cands = [forced] if forced in F.levels[x] else []
                else:
                    cands = [forced] if forced in cands else []
                if not cands:
                    return []
        return list(F.levels[x]) if cands is None else cands

    def search():
        best, best_c = None, None
        for i in range(n):
            if assign[i] is not None:
                continue
            c = candidates(i)
            if best is None or len(c) < len(best_c):
                best, best_c = i, c
                if not c:
                    return
                if len(c) == 1:
                    break
        if best is None:
            results.append(list(assign))
            return
        for v in best_c:
            assign[best] = v
            search()
        assign[best] = None

    search()
    maps = []
    for sol in results:
        comps = {x: {} for x in base.objects}
        for (x, e), v in zip(pairs, sol):
            comps[x][e] = v
        maps.append(PresheafMap(K, F, comps))
    maps.sort(key=lambda m: m.key())
    return tuple(maps)


# ---------------------------------------------------------------------------
# Convolution product (coend over a monoidal base).
# ---------------------------------------------------------------------------


class DayProduct(Presheaf):
    def __init__(self, base, levels, action, class_of, witness, truncated, skipped_edges, label):
        super().__init__(base, levels, action, label)
        self.class_of = class_of  # (c, node) -> class id
        self.witness = witness  # (c, id) -> node
        self.truncated = truncated
        self.skipped_edges = skipped_edges


def day_product(K: Presheaf, L: Presheaf, label="day") -> DayProduct:
    """Convolution of K and L over a (possibly partially) monoidal base.

    Elements at level c are equivalence classes of tuples
    ``(i, j, a in K(i), b in L(j), u : c -> i@j)`` under sliding arrows of
    the base through either slot.  When the base's tensor leaves the
    truncation, affected tuples are dropped and the result is flagged.
    """
    base = K.base
    if base.tensor_obj is None:
        raise ValueError(f"base {base.name} has no monoidal structure")
    if K.base is not L.base:
        raise BaseMismatchError("day_product across different bases")
    truncated = False
    skipped_edges = 0
    pair_cods = {}
    for i in base.objects:
        for j in base.objects:
            if not K.levels[i] or not L.levels[j]:
                continue
            ij = base.tensor_obj(i, j)
            if ij is None:
                truncated = True
                continue
            pair_cods[(i, j)] = ij

    nodes_by_level = {}
    for c in base.objects:
        nodes = []
        for (i, j), ij in pair_cods.items():
            for a in K.levels[i]:
                for b in L.levels[j]:
                    for u in base.hom(c, ij):
                        nodes.append((i, j, a, b, u))
        nodes_by_level[c] = nodes

    class_of, witness, levels = {}, {}, {}
    for c in base.objects:
        uf = _UnionFind()
        nodes = nodes_by_level[c]
        for nd in nodes:
            uf.add(nd)
        for f in base.nonidentity_arrows():
            i, ip = base.dom[f], base.cod[f]
            for j in base.objects:
                if (i, j) not in pair_cods or (ip, j) not in pair_cods:
                    continue
                try:
                    fid = base.tensor_arr(f, base.identity[j])
                except TensorUndefinedError:
                    skipped_edges += 1
                    continue
                if fid is None:
                    skipped_edges += 1
                    continue
                for ap in K.levels[ip]:
                    a = K.act(f, ap)
                    for b in L.levels[j]:
                        for u in base.hom(c, pair_cods[(i, j)]):
                            uf.union((i, j, a, b, u), (ip, j, ap, b, base.comp(fid, u)))
        for g in base.nonidentity_arrows():
            j, jp = base.dom[g], base.cod[g]
            for i in base.objects:
                if (i, j) not in pair_cods or (i, jp) not in pair_cods:
                    continue
                try:
                    idg = base.tensor_arr(base.identity[i], g)
                except TensorUndefinedError:
                    skipped_edges += 1
                    continue
                if idg is None:
                    skipped_edges += 1
                    continue
                for a in K.levels[i]:
                    for bp in L.levels[jp]:
                        b = L.act(g, bp)
                        for u in base.hom(c, pair_cods[(i, j)]):
                            uf.union((i, j, a, b, u), (i, jp, a, bp, base.comp(idg, u)))
        reps = {}
        for nd in nodes:
            r = uf.find(nd)
            if r not in reps:
                reps[r] = len(reps)
                witness[(c, reps[r])] = nd
            class_of[(c, nd)] = reps[r]
        levels[c] = tuple(range(len(reps)))

    action = {}
    for v in base.nonidentity_arrows():
        cp, c = base.dom[v], base.cod[v]
        table = {}
        for cls in levels[c]:
            i, j, a, b, u = witness[(c, cls)]
            table[cls] = class_of[(cp, (i, j, a, b, base.comp(u, v)))]
        action[v] = table
    return DayProduct(base, levels, action, class_of, witness, truncated, skipped_edges, label)


def day_repr_compare(D: DayProduct, x, y) -> Optional[dict]:
    """Canonical map classes of yoneda(x) (x) yoneda(y) -> hom(-, x@y).

    Returns {(c, class): arrow} if every class admits a representative whose
    two legs tensor, else None.
    """
    base = D.base
    xy = base.tensor_obj(x, y)
    if xy is None:
        raise TruncationError("product object outside truncation")
    out = {}
    members = {}
    for (c, nd), cls in D.class_of.items():
        members.setdefault((c, cls), []).append(nd)
    for c in base.objects:
        for cls in D.levels[c]:
            val = None
            for (i, j, a, b, u) in members[(c, cls)]:
                try:
                    ab = base.tensor_arr(a, b)
                except TensorUndefinedError:
                    continue
                if ab is None:
                    continue
                v = base.comp(ab, u)
                if val is None:
                    val = v
                elif val != v:
                    return None
            if val is None:
                return None
            out[(c, cls)] = val
    return out


def day_unit_compare(D: DayProduct, K: Presheaf) -> Optional[dict]:
    """Canonical map yoneda(unit) (x) K -> K, as {(c, class): element}."""
    base = D.base
    out = {}
    members = {}
    for (c, nd), cls in D.class_of.items():
        members.setdefault((c, cls), []).append(nd)
    for c in base.objects:
        for cls in D.levels[c]:
            val = None
            for (i, j, a, b, u) in members[(c, cls)]:
                try:
                    aid = base.tensor_arr(a, base.identity[j])
                except TensorUndefinedError:
                    continue
                if aid is None:
                    continue
                arrow = base.comp(aid, u)
                v = b if base.is_identity(arrow) else K.act(arrow, b)
                if val is None:
                    val = v
                elif val != v:
                    return None
            if val is None:
                return None
            out[(c, cls)] = val
    return out


# ---------------------------------------------------------------------------
# Functors and Kan extensions.
# ---------------------------------------------------------------------------


@dataclass
class Functor:
    src: BaseCategory
    dst: BaseCategory
    ob: dict
    ar: dict

    def on_arrow(self, a):
        if self.src.is_identity(a):
            return self.dst.identity[self.ob[self.src.dom[a]]]
        return self.ar[a]

    def validate(self):
        for a in self.src.arrows():
            fa = self.on_arrow(a)
            assert self.dst.dom[fa] == self.ob[self.src.dom[a]]
            assert self.dst.cod[fa] == self.ob[self.src.cod[a]]
        for f in self.src.arrows():
            for z in self.src.objects:
                for g in self.src.hom(self.src.cod[f], z):
                    assert self.on_arrow(self.src.comp(g, f)) == self.dst.comp(
                        self.on_arrow(g), self.on_arrow(f)
                    )


def restrict(p: Functor, K: Presheaf) -> Presheaf:
    """Precomposition p^*: a presheaf on dst pulled back to src."""
    if K.base is not p.dst:
        raise BaseMismatchError("restrict: presheaf not over the functor's target")
    levels = {d: K.levels[p.ob[d]] for d in p.src.objects}
    action = {}
    for a in p.src.nonidentity_arrows():
        fa = p.on_arrow(a)
        if p.dst.is_identity(fa):
            action[a] = {e: e for e in levels[p.src.cod[a]]}
        else:
            action[a] = {e: K.act(fa, e) for e in levels[p.src.cod[a]]}
    return Presheaf(p.src, levels, action, f"restrict({K.label})")


class LanPresheaf(Presheaf):
    def __init__(self, base, levels, action, class_of, witness, label):
        super().__init__(base, levels, action, label)
        self.class_of = class_of  # (x, (d, a, phi)) -> class id
        self.witness = witness


def lan(p: Functor, K: Presheaf) -> LanPresheaf:
    """Left Kan extension along p, as classes of (d, element, connecting map)."""
    if K.base is not p.src:
        raise BaseMismatchError("lan: presheaf not over the functor's source")
    src, dst = p.src, p.dst
    class_of, witness, levels = {}, {}, {}
    for x in dst.objects:
        uf = _UnionFind()
        nodes = []
        for d in src.objects:
            for a in K.levels[d]:
                for phi in dst.hom(x, p.ob[d]):
                    nodes.append((d, a, phi))
                    uf.add((d, a, phi))
        for h in src.nonidentity_arrows():
            d, dp = src.dom[h], src.cod[h]
            ph = p.on_arrow(h)
            for ap in K.levels[dp]:
                a = K.act(h, ap)
                for phi in dst.hom(x, p.ob[d]):
                    uf.union((d, a, phi), (dp, ap, dst.comp(ph, phi)))
        reps = {}
        for nd in nodes:
            r = uf.find(nd)
            if r not in reps:
                reps[r] = len(reps)
                witness[(x, reps[r])] = nd
            class_of[(x, nd)] = reps[r]
        levels[x] = tuple(range(len(reps)))
    action = {}
    for v in dst.nonidentity_arrows():
        xp, x = dst.dom[v], dst.cod[v]
        table = {}
        for cls in levels[x]:
            d, a, phi = witness[(x, cls)]
            table[cls] = class_of[(xp, (d, a, dst.comp(phi, v)))]
        action[v] = table
    return LanPresheaf(dst, levels, action, class_of, witness, f"lan({K.label})")


def ran(p: Functor, K: Presheaf) -> Presheaf:
    """Right Kan extension along p.

    Level x is computed as the set of natural transformations from the
    restricted representable at x into K; each one is stored as a value
    tuple over the slot list ``[(d, u : p(d) -> x), ...]``.
    """
    if K.base is not p.src:
        raise BaseMismatchError("ran: presheaf not over the functor's source")
    src, dst = p.src, p.dst
    levels, keys_by_obj = {}, {}
    for x in dst.objects:
        rep = restrict(p, representable(dst, x))
        keys = [(d, u) for d in src.objects for u in rep.levels[d]]
        fams = sorted(
            (tuple(m.at(d, u) for (d, u) in keys) for m in nat_set(rep, K)),
            key=repr,
        )
        levels[x] = tuple(fams)
        keys_by_obj[x] = keys
    action = {}
    for v in dst.nonidentity_arrows():
        xp, x = dst.dom[v], dst.cod[v]
        keys_x = {k: i for i, k in enumerate(keys_by_obj[x])}
        table = {}
        for fam in levels[x]:
            moved = tuple(
                fam[keys_x[(d, dst.comp(v, u))]] for (d, u) in keys_by_obj[xp]
            )
            table[fam] = moved
        action[v] = table
    P = Presheaf(dst, levels, action, f"ran({K.label})")
    P.slot_keys = keys_by_obj
    return P


# -- adjunction transposes (used by the property suites) ----------------------


def lan_transpose(p: Functor, K: Presheaf, LK: LanPresheaf, Y: Presheaf, alpha: PresheafMap) -> PresheafMap:
    """Nat(lan K, Y) -> Nat(K, restrict Y)."""
    comps = {}
    for d in p.src.objects:
        x = p.ob[d]
        comps[d] = {
            a: alpha.at(x, LK.class_of[(x, (d, a, p.dst.identity[x]))])
            for a in K.levels[d]
        }
    return PresheafMap(K, restrict(p, Y), comps)


def lan_untranspose(p: Functor, K: Presheaf, LK: LanPresheaf, Y: Presheaf, beta: PresheafMap) -> PresheafMap:
    """Nat(K, restrict Y) -> Nat(lan K, Y)."""
    comps = {}
    for x in p.dst.objects:
        table = {}
        for cls in LK.levels[x]:
            d, a, phi = LK.witness[(x, cls)]
            v = beta.at(d, a)
            table[cls] = v if p.dst.is_identity(phi) else Y.act(phi, v)
        comps[x] = table
    return PresheafMap(LK, Y, comps)


def ran_transpose(p: Functor, Y: Presheaf, K: Presheaf, RK: Presheaf, gamma: PresheafMap) -> PresheafMap:
    """Nat(restrict Y, K) -> Nat(Y, ran K)."""
    comps = {}
    for x in p.dst.objects:
        keys = RK.slot_keys[x]
        table = {}
        for y in Y.levels[x]:
            fam = tuple(
                gamma.at(d, Y.act(u, y) if not p.dst.is_identity(u) else y)
                for (d, u) in keys
            )
            table[y] = fam
        comps[x] = table
    return PresheafMap(Y, RK, comps)


def ran_untranspose(p: Functor, Y: Presheaf, K: Presheaf, RK: Presheaf, delta: PresheafMap) -> PresheafMap:
    """Nat(Y, ran K) -> Nat(restrict Y, K)."""
    comps = {}
    RY = restrict(p, Y)
    for d in p.src.objects:
        x = p.ob[d]
        keys = {k: i for i, k in enumerate(RK.slot_keys[x])}
        idx = keys[(d, p.dst.identity[x])]
        comps[d] = {y: delta.at(x, y)[idx] for y in RY.levels[d]}
    return PresheafMap(RY, K, comps)


# ---------------------------------------------------------------------------
# Random presheaves by cell attachment.
# ---------------------------------------------------------------------------


def attach_cell(K: Presheaf, x, attaching: PresheafMap) -> Presheaf:
    """Glue a cell over x to K along a map from the boundary at x."""
    b, incl = boundary(K.base, x)
    assert attaching.source.same_levels(b)
    P, _, _ = pushout(incl, attaching)
    return P.relabel()[0]


def random_presheaf(base: BaseCategory, rng, max_per_level: int = 5, label="random") -> Presheaf:
    """Seeded random finite presheaf built degreewise by cell attachment."""
    K = empty_presheaf(base)
    for x in base.objects_by_degree():
        want = rng.randrange(0, max_per_level + 1)
        for _ in range(want):
            if len(K.levels[x]) >= max_per_level:
                break
            b, _ = boundary(base, x)
            maps = nat_set(b, K)
            if not maps:
                break
            att = maps[rng.randrange(len(maps))]
            K = attach_cell(K, x, att)
    K.label = label
    return K


def random_subpresheaf(P: Presheaf, rng) -> tuple[Presheaf, PresheafMap]:
    seed = {}
    for x in P.base.objects:
        elems = [e for e in P.levels[x] if rng.random() < 0.5]
        if elems:
            seed[x] = elems
    chosen = close_under_action(P, seed)
    return subpresheaf(P, chosen)


# ---------------------------------------------------------------------------
# JSON.
# ---------------------------------------------------------------------------


def presheaf_to_json(P: Presheaf, base_name: str, max_deg: int) -> dict:
    base = P.base
    Q, trans = P.relabel()
    levels = {base.object_name(x): list(Q.levels[x]) for x in base.objects}
    action = {}
    for a in base.nonidentity_arrows():
        action[base.arrow_name(a)] = sorted(Q.action[a].items())
    return {"base": base_name, "maxdeg": max_deg, "levels": levels, "action": action}


def presheaf_from_json(data: dict, base: Optional[BaseCategory] = None) -> Presheaf:
    if base is None:
        base = standard_base(data["base"], int(data["maxdeg"]))
    levels = {base.object_by_name(k): tuple(v) for k, v in data["levels"].items()}
    action = {}
    for name, pairs in data["action"].items():
        a = base.arrow_by_name(name)
        action[a] = {e: v for e, v in (tuple(p) for p in pairs)}
    for a in base.nonidentity_arrows():
        action.setdefault(a, {})
    P = Presheaf(base, levels, action, "from-json")
    P.validate()
    return P
