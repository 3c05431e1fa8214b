"""The marked-arrow category over the symmetric semi-cube base.

Arrows of the ambient word category are composable words of cube morphisms
with two reductions: identity letters vanish, and adjacent padded monotone
letters merge into their composite (padded monotone = the image of a simplex
injection, i.e. order-preserving, positive, endpoint-0 constants only).
Every word has a unique normal form;``p0`` evaluates a word back to a single
cube morphism and is invariant under reduction.

Objects of the marked-arrow category pair a simplex injection with a cube
automorphism of its target; a morphism is a twisted pair of words (u, v)
with ``normalize(v . word(source) . u) = word(target)``.  Non-padded
letters are conserved by reduction, so every morphism satisfies
``frees(u) + frees(v) + marked(source) = marked(target)``.

Markers may sit in either leg.  The two candidate readings genuinely
diverge: dropping domain-leg markers makes the collapse zig-zag natural but
breaks the projection's density (transporting a pulled-back diagram no
longer recovers it), while keeping them preserves density and directness
but leaves the zig-zag's unit transformation non-natural exactly at the
domain-marker morphisms.  The default keeps them; ``dom_markers=False``
builds the narrow variant, and tests/test_dr_readings.py pins both failure
modes down.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .cubes import (
    CubeMor,
    ShapeError,
    SimplexMor,
    automorphisms,
    compose_cube,
    cube_identity,
    cube_name,
    cube_of_simplex,
    cube_to_json,
    simplex_compose,
    simplex_factor,
    simplex_homs,
    simplex_identity,
    simplex_join,
    simplex_to_json,
    tensor_cube,
)
from .presheaves import BaseCategory, Functor, TensorUndefinedError, TruncationError

DEFAULT_MAX_DEGREE = 3


# ---------------------------------------------------------------------------
# Words.
# ---------------------------------------------------------------------------


class Word:
    __slots__ = ("dom", "cod", "letters", "_h")

    def __init__(self, dom: int, cod: int, letters: tuple[CubeMor, ...]):
        self.dom = dom
        self.cod = cod
        self.letters = tuple(letters)
        self._h = hash((dom, cod, self.letters))

    def __eq__(self, other):
        return (
            isinstance(other, Word)
            and self._h == other._h
            and self.dom == other.dom
            and self.letters == other.letters
        )

    def __hash__(self):
        return self._h

    @property
    def free_count(self) -> int:
        return sum(1 for l in self.letters if not l.is_zero_embedding)

    def __repr__(self):
        if not self.letters:
            return f"Word(id I^{self.dom})"
        return "Word(" + " ; ".join(cube_name(l) for l in self.letters) + ")"


def normalize(dom: int, letters) -> Word:
    """Unique normal form: no identity letters, no adjacent padded pair."""
    out = []
    cur = dom
    for f in letters:
        if f.dom != cur:
            raise ShapeError(f"letters not composable at I^{cur}: {f!r}")
        cur = f.cod
        if f.is_identity:
            continue
        if out and out[-1].is_zero_embedding and f.is_zero_embedding:
            out[-1] = compose_cube(f, out[-1])
        else:
            out.append(f)
    return Word(dom, cur, tuple(out))


def word_compose(second: Word, first: Word) -> Word:
    if first.cod != second.dom:
        raise ShapeError("words not composable")
    return normalize(first.dom, first.letters + second.letters)


def p0(w: Word) -> CubeMor:
    """Evaluate a word to its underlying cube morphism."""
    acc = cube_identity(w.dom)
    for letter in w.letters:
        acc = compose_cube(letter, acc)
    return acc


def embed_word(k: SimplexMor) -> Word:
    """The (possibly empty) one-letter word of a simplex injection."""
    return normalize(k.dom + 1, (cube_of_simplex(k),))


def empty_word(dim: int) -> Word:
    return Word(dim, dim, ())


def reduction_normal_forms(dom: int, letters: tuple) -> set[Word]:
    """All normal forms reachable by single reductions in any order."""
    seen = set()
    finals = set()

    def is_normal(ls):
        if any(l.is_identity for l in ls):
            return False
        return not any(
            a.is_zero_embedding and b.is_zero_embedding for a, b in zip(ls, ls[1:])
        )

    def walk(ls):
        if ls in seen:
            return
        seen.add(ls)
        if is_normal(ls):
            finals.add(Word(dom, ls[-1].cod if ls else dom, ls))
            return
        for i, l in enumerate(ls):
            if l.is_identity:
                walk(ls[:i] + ls[i + 1 :])
        for i in range(len(ls) - 1):
            if ls[i].is_zero_embedding and ls[i + 1].is_zero_embedding:
                merged = compose_cube(ls[i + 1], ls[i])
                walk(ls[:i] + (merged,) + ls[i + 2 :])

    walk(tuple(letters))
    return finals


# ---------------------------------------------------------------------------
# Objects and morphisms.
# ---------------------------------------------------------------------------


class DrObject:
    __slots__ = ("embed", "auto", "marked", "triple", "_h", "_word")

    def __init__(self, embed: SimplexMor, auto: CubeMor):
        if not auto.is_automorphism or auto.dom != embed.cod + 1:
            raise ShapeError(f"marker {auto!r} is not an automorphism of the target")
        self.embed = embed
        self.auto = auto
        self.marked = not auto.is_identity
        self.triple = (embed.cod + 1, embed.cod - embed.dom, int(self.marked))
        self._h = hash((embed, auto))
        self._word = None

    def __eq__(self, other):
        return (
            isinstance(other, DrObject)
            and self._h == other._h
            and self.embed == other.embed
            and self.auto == other.auto
        )

    def __hash__(self):
        return self._h

    @property
    def dom_dim(self) -> int:
        return self.embed.dom + 1

    @property
    def cod_dim(self) -> int:
        return self.embed.cod + 1

    def word(self) -> Word:
        if self._word is None:
            letters = []
            if not self.embed.is_identity:
                letters.append(cube_of_simplex(self.embed))
            if self.marked:
                letters.append(self.auto)
            self._word = normalize(self.dom_dim, letters)
        return self._word

    def __repr__(self):
        return f"DrObject({self.embed.dom}>{self.embed.cod}:{','.join(map(str, self.embed.image))}|{'.'.join(map(str, self.auto.entries))})"


ZERO_OBJECT = DrObject(simplex_identity(-1), cube_identity(0))


class DrMorphism:
    __slots__ = ("source", "target", "u", "v", "_h")

    def __init__(self, source: DrObject, target: DrObject, u: Word, v: Word):
        if u.dom != target.dom_dim or u.cod != source.dom_dim:
            raise ShapeError("u leg has wrong endpoints")
        if v.dom != source.cod_dim or v.cod != target.cod_dim:
            raise ShapeError("v leg has wrong endpoints")
        self.source = source
        self.target = target
        self.u = u
        self.v = v
        self._h = hash((source, target, u, v))

    def __eq__(self, other):
        return (
            isinstance(other, DrMorphism)
            and self._h == other._h
            and self.source == other.source
            and self.target == other.target
            and self.u == other.u
            and self.v == other.v
        )

    def __hash__(self):
        return self._h

    def holds(self) -> bool:
        lhs = normalize(
            self.u.dom, self.u.letters + self.source.word().letters + self.v.letters
        )
        return lhs == self.target.word()

    def conserves(self) -> bool:
        total = self.u.free_count + self.v.free_count + int(self.source.marked)
        return total == int(self.target.marked)

    @property
    def is_identity(self) -> bool:
        return self.source == self.target and not self.u.letters and not self.v.letters

    def __repr__(self):
        return f"DrMorphism({self.source!r} => {self.target!r}, u={self.u!r}, v={self.v!r})"


def dr_identity(o: DrObject) -> DrMorphism:
    return DrMorphism(o, o, empty_word(o.dom_dim), empty_word(o.cod_dim))


def dr_compose(m2: DrMorphism, m1: DrMorphism) -> DrMorphism:
    if m1.target != m2.source:
        raise ShapeError("marked-arrow morphisms not composable")
    u = normalize(m2.u.dom, m2.u.letters + m1.u.letters)
    v = normalize(m1.v.dom, m1.v.letters + m2.v.letters)
    out = DrMorphism(m1.source, m2.target, u, v)
    assert out.holds() and out.conserves()
    return out


# ---------------------------------------------------------------------------
# Hom-set enumeration.
# ---------------------------------------------------------------------------


def enumerate_drhom(s: DrObject, t: DrObject, dom_markers: bool = True) -> tuple[DrMorphism, ...]:
    """All morphisms s -> t.

    The non-padded letter budget of the two legs is fixed at
    ``marked(t) - marked(s)`` by conservation; within that budget the normal
    form of the twisted equation pins the legs to the closed forms below,
    which tests cross-check against a blind shape search.  With
    ``dom_markers`` off, morphisms carrying the marker inside ``u`` are
    dropped (the narrow reading).
    """
    budget = int(t.marked) - int(s.marked)
    if budget < 0:
        return ()
    if t.dom_dim > s.dom_dim or s.cod_dim > t.cod_dim:
        return ()
    kS, kT = s.embed, t.embed
    out = []
    if budget == 0 and s.marked:
        if s.auto != t.auto or s.cod_dim != t.cod_dim:
            return ()
        ku = simplex_factor(kS, kT)
        if ku is not None:
            out.append(
                DrMorphism(s, t, embed_word(ku), empty_word(s.cod_dim))
            )
    elif budget == 0:
        for kv in simplex_homs(kS.cod, kT.cod):
            ku = simplex_factor(simplex_compose(kv, kS), kT)
            if ku is not None:
                out.append(DrMorphism(s, t, embed_word(ku), embed_word(kv)))
    else:
        for av in simplex_homs(kS.cod, kT.cod):
            ku = simplex_factor(simplex_compose(av, kS), kT)
            if ku is not None:
                v = normalize(
                    s.cod_dim, embed_word(av).letters + (t.auto,)
                )
                out.append(DrMorphism(s, t, embed_word(ku), v))
        if dom_markers and kS.is_identity and s.cod_dim == t.cod_dim:
            u = normalize(
                t.dom_dim, embed_word(kT).letters + (t.auto,)
            )
            out.append(DrMorphism(s, t, u, empty_word(s.cod_dim)))
    for m in out:
        assert m.holds() and m.conserves()
    return tuple(out)


def enumerate_drhom_brute(s: DrObject, t: DrObject, allow_free_u: bool = False):
    """Blind search over all budgeted normal-form leg shapes.

    With ``allow_free_u`` the codomain-leg restriction is lifted; this wider
    space is only used by tests exploring the rejected reading.
    """
    budget = int(t.marked) - int(s.marked)
    if budget < 0:
        return ()

    def words(p, q, frees):
        """Normal-form words I^p -> I^q with exactly `frees` non-padded letters."""
        results = []
        if frees == 0:
            if p == q:
                results.append(empty_word(p))
            for k in simplex_homs(p - 1, q - 1):
                if not k.is_identity:
                    results.append(Word(p, q, (cube_of_simplex(k),)))
        else:
            for mid in range(p, q + 1):
                for a in automorphisms(mid):
                    if a.is_identity:
                        continue
                    for kpre in simplex_homs(p - 1, mid - 1):
                        for kpost in simplex_homs(mid - 1, q - 1):
                            letters = []
                            if not kpre.is_identity:
                                letters.append(cube_of_simplex(kpre))
                            letters.append(a)
                            if not kpost.is_identity:
                                letters.append(cube_of_simplex(kpost))
                            results.append(Word(p, q, tuple(letters)))
        return results

    out = []
    for fu in range(0, budget + 1) if allow_free_u else (0,):
        fv = budget - fu
        for u in words(t.dom_dim, s.dom_dim, fu):
            for v in words(s.cod_dim, t.cod_dim, fv):
                m = DrMorphism(s, t, u, v)
                if m.holds() and m.conserves():
                    out.append(m)
    return tuple(out)


# ---------------------------------------------------------------------------
# The truncated category.
# ---------------------------------------------------------------------------


def dr_objects(max_deg: int) -> tuple[DrObject, ...]:
    objs = []
    for cod_dim in range(max_deg + 1):
        b = cod_dim - 1
        for a in range(-1, b + 1):
            for k in simplex_homs(a, b):
                for w in automorphisms(cod_dim):
                    objs.append(DrObject(k, w))
    objs.sort(key=lambda o: (o.triple, o.embed.dom, o.embed.image, o.auto.entries))
    return tuple(objs)


def linear_degree(o: DrObject) -> int:
    cod, diff, flag = o.triple
    return (cod * 8 + diff) * 2 + flag


def dr_tensor_obj(o1: DrObject, o2: DrObject, max_deg: int | None = None):
    cod = o1.cod_dim + o2.cod_dim
    if max_deg is not None and cod > max_deg:
        return None
    return DrObject(simplex_join(o1.embed, o2.embed), tensor_cube(o1.auto, o2.auto))


def _leg_parts(w: Word):
    """Split a codomain leg into (simplex part, automorphism part)."""
    emb = simplex_identity(w.dom - 1)
    auto = None
    for letter in w.letters:
        if letter.is_zero_embedding:
            if auto is not None:
                raise TensorUndefinedError("letter after the marker")
            from .cubes import simplex_of_cube

            emb = simplex_of_cube(letter)
        else:
            if auto is not None:
                raise TensorUndefinedError("two non-padded letters")
            auto = letter
    if auto is None:
        auto = cube_identity(w.cod)
    return emb, auto


def dr_tensor_mor(m1: DrMorphism, m2: DrMorphism, max_deg: int | None = None) -> DrMorphism:
    """Componentwise tensor of morphisms; raises when no twisted pair exists.

    The marker budget of the two factors must sit in compatible slots: a
    factor that introduces a marker cannot be tensored with one that merely
    transports a marker, because the combined word would need two non-padded
    letters where the target word has one.
    """
    src = dr_tensor_obj(m1.source, m2.source, max_deg)
    tgt = dr_tensor_obj(m1.target, m2.target, max_deg)
    if src is None or tgt is None:
        raise TruncationError("tensor leaves the truncation")
    ku1, au1 = _leg_parts(m1.u)
    ku2, au2 = _leg_parts(m2.u)
    if not (au1.is_identity and au2.is_identity):
        raise TensorUndefinedError("marker in a domain leg")
    av1, a1 = _leg_parts(m1.v)
    av2, a2 = _leg_parts(m2.v)
    u = embed_word(simplex_join(ku1, ku2))
    v = normalize(
        src.cod_dim,
        embed_word(simplex_join(av1, av2)).letters
        + (tensor_cube(a1, a2),),
    )
    m = DrMorphism(src, tgt, u, v)
    if not (m.holds() and m.conserves()):
        raise TensorUndefinedError(
            f"no tensor morphism for marker slots of {m1!r} and {m2!r}"
        )
    return m


def dr_object_name(o: DrObject) -> str:
    img = ",".join(map(str, o.embed.image))
    auto = ".".join(map(str, o.auto.entries))
    return f"({o.embed.dom}>{o.embed.cod}:{img}|{auto})"


def word_name(w: Word) -> str:
    return "id" if not w.letters else ";".join(cube_name(l) for l in w.letters)


def dr_arrow_name(m: DrMorphism) -> str:
    return f"{dr_object_name(m.source)}->{dr_object_name(m.target)}#u={word_name(m.u)}#v={word_name(m.v)}"


def build_dr(max_deg: int, bound: int = DEFAULT_MAX_DEGREE, dom_markers: bool = True) -> BaseCategory:
    """The truncated marked-arrow category as a presheaf base.

    Degree is the lexicographic triple (target dimension, dimension jump,
    marker flag), packed into one integer.
    """
    if max_deg > bound:
        raise TruncationError(f"max_deg {max_deg} exceeds configured bound {bound}")
    objects = dr_objects(max_deg)
    homs, dom, cod = {}, {}, {}
    for s in objects:
        for t in objects:
            ms = enumerate_drhom(s, t, dom_markers=dom_markers)
            if ms:
                homs[(s, t)] = ms
                for m in ms:
                    dom[m], cod[m] = s, t
    compose = {}
    by_source = {}
    for (s, t), ms in homs.items():
        for m in ms:
            by_source.setdefault(s, []).append(m)
    for (s, t), ms in homs.items():
        for m2 in by_source.get(t, ()):
            for m1 in ms:
                compose[(m2, m1)] = dr_compose(m2, m1)
    base = BaseCategory(
        name="dr",
        mode="direct",
        objects=objects,
        deg={o: linear_degree(o) for o in objects},
        homs=homs,
        dom=dom,
        cod=cod,
        identity={o: dr_identity(o) for o in objects},
        compose=compose,
        tensor_obj=lambda a, b: dr_tensor_obj(a, b, max_deg),
        tensor_arr=lambda f, g: dr_tensor_mor(f, g, max_deg),
        unit=ZERO_OBJECT,
        obj_name=dr_object_name,
        arr_name=dr_arrow_name,
    )
    base.max_deg = max_deg
    base.dom_markers = dom_markers
    return base


def projection_functor(dr_base: BaseCategory, sym_base: BaseCategory) -> Functor:
    """Target-dimension projection onto the symmetric cube base."""
    ob = {o: o.cod_dim for o in dr_base.objects}
    ar = {m: p0(m.v) for m in dr_base.nonidentity_arrows()}
    return Functor(dr_base, sym_base, ob, ar)


# ---------------------------------------------------------------------------
# Structure checks.
# ---------------------------------------------------------------------------


@dataclass
class CheckOutcome:
    ok: bool
    counterexamples: list = None

    def __post_init__(self):
        if self.counterexamples is None:
            self.counterexamples = []


def check_direct(base: BaseCategory, degree_of=None) -> CheckOutcome:
    """Every nonidentity morphism must strictly raise the degree triple."""
    degree_of = degree_of or (lambda o: o.triple)
    bad = []
    for m in base.nonidentity_arrows():
        if not degree_of(m.source) < degree_of(m.target):
            bad.append(
                {
                    "source": dr_object_name(m.source),
                    "target": dr_object_name(m.target),
                    "source_degree": degree_of(m.source),
                    "target_degree": degree_of(m.target),
                }
            )
    return CheckOutcome(not bad, bad)


def check_conservation(base: BaseCategory) -> CheckOutcome:
    bad = [dr_arrow_name(m) for m in base.nonidentity_arrows() if not m.conserves()]
    return CheckOutcome(not bad, bad)


def check_composition_closure(base: BaseCategory) -> CheckOutcome:
    bad = []
    for m1 in base.nonidentity_arrows():
        for t2 in base.objects:
            for m2 in base.hom(m1.target, t2):
                if base.is_identity(m2):
                    continue
                comp = dr_compose(m2, m1)
                if comp not in set(base.hom(comp.source, comp.target)):
                    bad.append((dr_arrow_name(m1), dr_arrow_name(m2)))
    return CheckOutcome(not bad, bad)


# ---------------------------------------------------------------------------
# The collapse zig-zag.
# ---------------------------------------------------------------------------


def collapse_object(o: DrObject) -> DrObject:
    """Precompose with the unique embedding from the empty simplex."""
    return DrObject(SimplexMor(-1, o.embed.cod, ()), o.auto)


def collapse_morphism(m: DrMorphism) -> DrMorphism:
    """The collapsed legs: markers stranded in u migrate to the tail of v."""
    stranded = tuple(l for l in m.u.letters if not l.is_zero_embedding)
    return DrMorphism(
        collapse_object(m.source),
        collapse_object(m.target),
        empty_word(0),
        normalize(m.source.cod_dim, m.v.letters + stranded),
    )


def unit_component(o: DrObject) -> DrMorphism:
    """Component o -> collapse(o): top leg the unique map from the point."""
    return DrMorphism(
        o,
        collapse_object(o),
        embed_word(SimplexMor(-1, o.embed.dom, ())),
        empty_word(o.cod_dim),
    )


def cone_component(o: DrObject) -> DrMorphism:
    """Component zero -> collapse(o): bottom leg the collapsed word itself."""
    co = collapse_object(o)
    return DrMorphism(ZERO_OBJECT, co, empty_word(0), co.word())


@dataclass
class ZigzagReport:
    functor_ok: bool
    unit_natural_ok: bool
    cone_natural_ok: bool
    restriction_ok: bool
    counterexamples: list

    @property
    def ok(self):
        return self.functor_ok and self.unit_natural_ok and self.cone_natural_ok and self.restriction_ok


def zigzag_check(base: BaseCategory) -> ZigzagReport:
    objects = base.objects
    bad = []
    functor_ok = True
    for m in base.nonidentity_arrows():
        dm = collapse_morphism(m)
        if not (dm.holds() and dm.conserves()):
            functor_ok = False
            bad.append(("collapse-not-a-morphism", dr_arrow_name(m)))
    for m1 in base.nonidentity_arrows():
        for t2 in objects:
            for m2 in base.hom(m1.target, t2):
                if base.is_identity(m2):
                    continue
                lhs = collapse_morphism(dr_compose(m2, m1))
                rhs = dr_compose(collapse_morphism(m2), collapse_morphism(m1))
                if lhs != rhs:
                    functor_ok = False
                    bad.append(("collapse-not-functorial", dr_arrow_name(m1), dr_arrow_name(m2)))
    for o in objects:
        if collapse_object(collapse_object(o)) != collapse_object(o):
            functor_ok = False
            bad.append(("collapse-not-idempotent", dr_object_name(o)))

    unit_ok = True
    for o in objects:
        eta = unit_component(o)
        if not (eta.holds() and eta.conserves()):
            unit_ok = False
            bad.append(("unit-component-invalid", dr_object_name(o)))
    for m in base.nonidentity_arrows():
        lhs = dr_compose(unit_component(m.target), m)
        rhs = dr_compose(collapse_morphism(m), unit_component(m.source))
        if lhs != rhs:
            unit_ok = False
            bad.append(("unit-not-natural", dr_arrow_name(m)))

    cone_ok = True
    for o in objects:
        kappa = cone_component(o)
        if not (kappa.holds() and kappa.conserves()):
            cone_ok = False
            bad.append(("cone-component-invalid", dr_object_name(o)))
    for m in base.nonidentity_arrows():
        lhs = cone_component(m.target)
        rhs = dr_compose(collapse_morphism(m), cone_component(m.source))
        if lhs != rhs:
            cone_ok = False
            bad.append(("cone-not-natural", dr_arrow_name(m)))
    if collapse_object(ZERO_OBJECT) != ZERO_OBJECT:
        cone_ok = False
        bad.append(("zero-not-fixed",))

    restriction_ok = True
    max_dim = max((o.cod_dim for o in objects), default=0)
    for n in range(max_dim + 1):
        inside = {o for o in objects if o.cod_dim <= n}
        for o in inside:
            if collapse_object(o) not in inside:
                restriction_ok = False
                bad.append(("collapse-escapes-truncation", n, dr_object_name(o)))
            eta = unit_component(o)
            if eta.source not in inside or eta.target not in inside:
                restriction_ok = False
                bad.append(("unit-escapes-truncation", n, dr_object_name(o)))
        for m in base.nonidentity_arrows():
            if m.source in inside and m.target in inside:
                dm = collapse_morphism(m)
                if dm.source not in inside or dm.target not in inside:
                    restriction_ok = False
                    bad.append(("collapse-morphism-escapes", n, dr_arrow_name(m)))

    return ZigzagReport(functor_ok, unit_ok, cone_ok, restriction_ok, bad)


# ---------------------------------------------------------------------------
# JSON export.
# ---------------------------------------------------------------------------


def word_to_json(w: Word) -> dict:
    return {"dom": w.dom, "cod": w.cod, "letters": [cube_to_json(l) for l in w.letters]}


def dr_to_json(base: BaseCategory) -> dict:
    objects = [
        {
            "name": dr_object_name(o),
            "embed": simplex_to_json(o.embed),
            "auto": cube_to_json(o.auto),
            "degree": list(o.triple),
        }
        for o in base.objects
    ]
    morphisms = [
        {
            "source": dr_object_name(m.source),
            "target": dr_object_name(m.target),
            "u": word_to_json(m.u),
            "v": word_to_json(m.v),
        }
        for m in base.nonidentity_arrows()
    ]
    return {"max_degree": base.max_deg, "objects": objects, "morphisms": morphisms}
