"""Frames of nonempty finite sets and the operations the oracle model checks.

The ambient model: objects are nonempty finite sets, fibrations are
surjections, anodyne maps are injections, and every map counts as a weak
equivalence.  A frame is a presheaf of nonempty finite sets over a direct
base whose matching maps are all surjective; the matching object at x is the
set of natural families over the boundary at x, enumerated by brute force.

Cotensors are computed by the skeletal pullback recipe, one degree at a
time, and every cotensor can be compared elementwise against the natural
transformation set it represents.  Gap maps, cotensors by convolution
products, cone extension over the marked-arrow base, and right Kan transport
along the projection are built on top.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .presheaves import (
    BaseCategory,
    Functor,
    Presheaf,
    PresheafMap,
    boundary,
    day_product,
    nat_set,
    representable,
    restrict,
    ran,
    terminal_presheaf,
)


class NotFibrantError(RuntimeError):
    pass


class ModelViolationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Matching data and frames.
# ---------------------------------------------------------------------------


def _boundary_cached(base: BaseCategory, x):
    cache = getattr(base, "_boundary_cache", None)
    if cache is None:
        cache = {}
        base._boundary_cache = cache
    if x not in cache:
        cache[x] = boundary(base, x)
    return cache[x]


def _family_pairs(K: Presheaf):
    base = K.base
    return [
        (x, e)
        for x in base.objects_by_degree()
        for e in K.levels[x]
    ]


def matching_object(F: Presheaf, x):
    """(families, map): the brute-force matching set at x with F(x)'s map into it.

    A family is a value tuple over the boundary's element list; the matching
    map sends an element to the tuple of its images under every boundary
    arrow.
    """
    bd, _ = _boundary_cached(F.base, x)
    pairs = _family_pairs(bd)
    fams = tuple(
        sorted((tuple(m.at(y, a) for (y, a) in pairs) for m in nat_set(bd, F)), key=repr)
    )
    to_match = {e: tuple(F.act(a, e) for (_, a) in pairs) for e in F.levels[x]}
    return fams, to_match, pairs


class SetFrame:
    def __init__(self, presheaf: Presheaf, certificate: dict):
        self.presheaf = presheaf
        self.certificate = certificate  # x -> (families, matching map, pairs)

    @property
    def base(self):
        return self.presheaf.base

    def level(self, x):
        return self.presheaf.levels[x]

    def act(self, a, e):
        return self.presheaf.act(a, e)

    def __repr__(self):
        sizes = [len(self.presheaf.levels[x]) for x in self.base.objects]
        return f"SetFrame<{self.presheaf.label} sizes={sizes}>"


def as_frame(P: Presheaf) -> SetFrame:
    """Certify Reedy fibrancy (and nonemptiness) or raise NotFibrantError."""
    cert = {}
    for x in P.base.objects:
        if not P.levels[x]:
            raise NotFibrantError(f"empty level at {P.base.object_name(x)}")
        fams, to_match, pairs = matching_object(P, x)
        if set(to_match.values()) != set(fams):
            missing = set(fams) - set(to_match.values())
            raise NotFibrantError(
                f"matching map not surjective at {P.base.object_name(x)}: "
                f"{len(missing)} of {len(fams)} families unreached"
            )
        cert[x] = (fams, to_match, pairs)
    return SetFrame(P, cert)


def is_fibrant(P: Presheaf) -> bool:
    try:
        as_frame(P)
        return True
    except NotFibrantError:
        return False


# ---------------------------------------------------------------------------
# Frame maps.
# ---------------------------------------------------------------------------


class FrameMap:
    def __init__(self, source: SetFrame, target: SetFrame, mapping: PresheafMap):
        assert mapping.source is source.presheaf and mapping.target is target.presheaf
        mapping.validate()
        self.source = source
        self.target = target
        self.mapping = mapping

    def at(self, x, e):
        return self.mapping.at(x, e)

    @property
    def levelwise_surjective(self) -> bool:
        return all(
            set(self.mapping.components[x].values()) == set(self.target.level(x))
            for x in self.source.base.objects
        )

    @property
    def levelwise_injective(self) -> bool:
        return self.mapping.is_mono

    @property
    def levelwise_bijective(self) -> bool:
        return self.levelwise_injective and self.levelwise_surjective

    def relative_matching_surjective(self, x) -> bool:
        F, G = self.source, self.target
        famsF, matchF, pairs = F.certificate[x]
        famsG, matchG, pairsG = G.certificate[x]
        assert [p[1] for p in pairs] == [p[1] for p in pairsG]
        push = {
            fam: tuple(self.at(y, v) for (y, _), v in zip(pairs, fam))
            for fam in famsF
        }
        target_pairs = {
            (g, fam)
            for g in G.level(x)
            for fam in famsF
            if push[fam] == matchG[g]
        }
        image = {(self.at(x, e), matchF[e]) for e in F.level(x)}
        return image == target_pairs

    @property
    def reedy_fibration(self) -> bool:
        return all(
            self.relative_matching_surjective(x) for x in self.source.base.objects
        )


def identity_framemap(F: SetFrame) -> FrameMap:
    from .presheaves import identity_map

    return FrameMap(F, F, identity_map(F.presheaf))


# ---------------------------------------------------------------------------
# Skeletal cotensors.
# ---------------------------------------------------------------------------


@dataclass
class Cotensor:
    frame: SetFrame
    K: Presheaf
    pairs: list
    elements: tuple  # value tuples over `pairs`
    stage_sizes: list = field(default_factory=list)

    def index(self):
        return {p: i for i, p in enumerate(self.pairs)}


def cotensor_skeletal(F: SetFrame, K: Presheaf, subset=None) -> Cotensor:
    """The representing set of K-shaped families in F, degree by degree.

    Stage n extends each family by one value per degree-n cell, constrained
    to agree with the already-built part on the cell's boundary: exactly the
    iterated pullback of products along boundary restrictions.  ``subset``
    restricts to an action-closed element set of K.
    """
    base = K.base
    if base.mode != "direct":
        raise ValueError("skeletal cotensor needs a direct base; transport first")
    if K.base is not F.base:
        raise ValueError("cotensor: presheaf and frame over different bases")
    pairs = [p for p in _family_pairs(K) if subset is None or p in subset]
    by_degree = {}
    for (x, e) in pairs:
        by_degree.setdefault(base.deg[x], []).append((x, e))
    partials = [{}]
    stage_sizes = []
    for n in sorted(by_degree):
        cells = by_degree[n]
        new = []
        for sigma in partials:
            per_cell = []
            for (x, e) in cells:
                bd, _ = _boundary_cached(base, x)
                cands = []
                for v in F.level(x):
                    ok = True
                    for y in base.objects:
                        for a in bd.levels[y]:
                            ke = K.act(a, e)
                            if subset is not None and (y, ke) not in subset:
                                continue
                            if F.act(a, v) != sigma[(y, ke)]:
                                ok = False
                                break
                        if not ok:
                            break
                    if ok:
                        cands.append(v)
                per_cell.append(cands)
            for combo in itertools.product(*per_cell):
                ext = dict(sigma)
                for (x, e), v in zip(cells, combo):
                    ext[(x, e)] = v
                new.append(ext)
        partials = new
        stage_sizes.append(len(partials))
    elements = tuple(sorted((tuple(s[p] for p in pairs) for s in partials), key=repr))
    return Cotensor(F, K, pairs, elements, stage_sizes)


def cotensor_oracle_report(F: SetFrame, K: Presheaf) -> dict:
    """Compare the skeletal cotensor with the brute-force transformation set."""
    cot = cotensor_skeletal(F, K)
    maps = nat_set(K, F.presheaf)
    oracle = {tuple(m.at(x, e) for (x, e) in cot.pairs) for m in maps}
    built = set(cot.elements)
    return {
        "cotensor_size": len(built),
        "oracle_size": len(oracle),
        "bijection_ok": built == oracle and len(cot.elements) == len(maps),
    }


def cotensor_restrict(C_L: Cotensor, i: PresheafMap, C_K: Cotensor):
    """Restriction along a mono i : K -> L, on value tuples."""
    pos = C_L.index()
    out = {}
    for fam in C_L.elements:
        out[fam] = tuple(fam[pos[(x, i.at(x, e))]] for (x, e) in C_K.pairs)
    return out


def cotensor_postcompose(C_F: Cotensor, q: FrameMap, C_G: Cotensor):
    out = {}
    for fam in C_F.elements:
        out[fam] = tuple(q.at(x, v) for (x, _), v in zip(C_F.pairs, fam))
    return out


# ---------------------------------------------------------------------------
# Gap maps.
# ---------------------------------------------------------------------------


@dataclass
class GapReport:
    surjective: bool
    bijective: bool
    q_levelwise_bijective: bool
    chain_surjective: bool
    chain_composes_to_direct: bool
    sizes: dict

    @property
    def ok(self):
        wants_bij = self.q_levelwise_bijective
        return (
            self.surjective
            and self.chain_surjective
            and self.chain_composes_to_direct
            and (self.bijective or not wants_bij)
        )


def gap_map(i: PresheafMap, q: FrameMap) -> GapReport:
    """The comparison from L-families into the K/target pullback.

    Built twice: directly, and cell by cell along a single-cell filtration
    of L relative to the image of i; the chain's steps must each be
    surjective and compose to the direct map.
    """
    if not i.is_mono:
        raise ValueError("gap_map: i is not a monomorphism")
    if not q.reedy_fibration:
        raise ValueError("gap_map: q is not a Reedy fibration")
    K, L = i.source, i.target
    F, G = q.source, q.target
    base = L.base
    C_FL = cotensor_skeletal(F, L)
    C_GL = cotensor_skeletal(G, L)
    C_FK = cotensor_skeletal(F, K)
    C_GK = cotensor_skeletal(G, K)
    post_L = cotensor_postcompose(C_FL, q, C_GL)
    post_K = cotensor_postcompose(C_FK, q, C_GK)
    res_F = cotensor_restrict(C_FL, i, C_FK)
    res_G = cotensor_restrict(C_GL, i, C_GK)
    target = {
        (a, b)
        for a in C_GL.elements
        for b in C_FK.elements
        if res_G[a] == post_K[b]
    }
    direct = {fam: (post_L[fam], res_F[fam]) for fam in C_FL.elements}
    image = set(direct.values())
    surjective = image == target
    bijective = surjective and len(direct) == len(target) == len(
        set(direct.values())
    )

    # single-cell chain from the image of i up to L
    img = {(x, i.at(x, e)) for (x, e) in C_FK.pairs}
    cells = [p for p in C_FL.pairs if p not in img]
    chain_surj = True
    included = set(img)
    prev_F = cotensor_skeletal(F, L, subset=included)
    prev_G = cotensor_skeletal(G, L, subset=included)
    for cell in cells:
        included = included | {cell}
        cur_F = cotensor_skeletal(F, L, subset=included)
        cur_G = cotensor_skeletal(G, L, subset=included)
        pos_cur = {p: k for k, p in enumerate(cur_F.pairs)}
        step_target = set()
        for a in cur_G.elements:
            a_prev = tuple(a[pos_cur[p]] for p in prev_G.pairs)
            for b in prev_F.elements:
                if a_prev == tuple(q.at(x, v) for (x, _), v in zip(prev_F.pairs, b)):
                    step_target.add((a, b))
        step_image = set()
        for fam in cur_F.elements:
            qfam = tuple(q.at(x, v) for (x, _), v in zip(cur_F.pairs, fam))
            bfam = tuple(fam[pos_cur[p]] for p in prev_F.pairs)
            step_image.add((qfam, bfam))
        if step_image != step_target:
            chain_surj = False
        prev_F, prev_G = cur_F, cur_G
    # after all cells, prev_F has the pairs of L in subset order; the chain's
    # endpoint data must reproduce the direct gap map
    perm = [C_FL.index()[p] for p in prev_F.pairs]
    composes = True
    for fam in C_FL.elements:
        reordered = tuple(fam[k] for k in perm)
        if reordered not in set(prev_F.elements):
            composes = False
            break
        qfam = tuple(q.at(x, v) for (x, _), v in zip(prev_F.pairs, reordered))
        want_q = tuple(direct[fam][0][C_GL.index()[p]] for p in prev_G.pairs)
        if qfam != want_q:
            composes = False
            break
    return GapReport(
        surjective=surjective,
        bijective=bijective,
        q_levelwise_bijective=q.levelwise_bijective,
        chain_surjective=chain_surj,
        chain_composes_to_direct=composes,
        sizes={
            "FL": len(C_FL.elements),
            "GL": len(C_GL.elements),
            "FK": len(C_FK.elements),
            "GK": len(C_GK.elements),
            "pullback": len(target),
        },
    )


def induced_factorization_check(q: FrameMap, K: Presheaf) -> bool:
    """The stagewise two-step route of q's action on K-families.

    At each degree, the induced map factors as (keep source cells, push the
    part below) followed by (push the cells, keep the rest); both steps must
    stay inside the mixed compatibility set and compose to plain
    postcomposition by q.
    """
    base = K.base
    F = q.source
    pairs = _family_pairs(K)
    degrees = sorted({base.deg[x] for (x, _) in pairs})
    for n in degrees:
        upto = {p for p in pairs if base.deg[p[0]] <= n}
        below = {p for p in pairs if base.deg[p[0]] < n}
        C_F_n = cotensor_skeletal(F, K, subset=upto)
        C_G_n = cotensor_skeletal(q.target, K, subset=upto)
        C_G_b = cotensor_skeletal(q.target, K, subset=below)
        pos = {p: k for k, p in enumerate(C_F_n.pairs)}
        gpos_b = {p: k for k, p in enumerate(C_G_b.pairs)}
        cell_idx = [k for k, p in enumerate(C_F_n.pairs) if p not in below]

        def mixed_ok(cells, g):
            """Pushed boundaries of the kept source cells agree with g."""
            for k, idx in zip(range(len(cell_idx)), cell_idx):
                x, e = C_F_n.pairs[idx]
                bd, _ = _boundary_cached(base, x)
                for y in base.objects:
                    for a in bd.levels[y]:
                        ke = K.act(a, e)
                        if (y, ke) not in below:
                            continue
                        if q.at(y, F.act(a, cells[k])) != g[gpos_b[(y, ke)]]:
                            return False
            return True

        gset = set(C_G_n.elements)
        for fam in C_F_n.elements:
            cells = tuple(fam[k] for k in cell_idx)
            qlow = tuple(
                q.at(p[0], fam[pos[p]]) for p in C_G_b.pairs
            )
            if not mixed_ok(cells, qlow):
                return False
            qcells = tuple(
                q.at(C_F_n.pairs[idx][0], c) for idx, c in zip(cell_idx, cells)
            )
            direct = tuple(q.at(p[0], v) for p, v in zip(C_F_n.pairs, fam))
            recomposed = list(direct)
            for k, idx in enumerate(cell_idx):
                recomposed[idx] = qcells[k]
            for p in C_G_b.pairs:
                recomposed[pos[p]] = qlow[gpos_b[p]]
            if tuple(recomposed) != direct or direct not in gset:
                return False
    return True


# ---------------------------------------------------------------------------
# Cotensors by convolution products, and the enriched hom.
# ---------------------------------------------------------------------------


def frame_cotensor(K: Presheaf, F: SetFrame) -> SetFrame:
    """Levelwise cotensor by the convolution of each representable with K.

    The result carries ``.days`` and ``.cots`` (per object) so callers can
    transport families along maps in either convolution slot.
    """
    base = F.base
    if base.tensor_obj is None:
        raise ValueError("frame cotensor needs a monoidal base")
    days = {
        x: day_product(representable(base, x), K, label=f"day@{base.object_name(x)}")
        for x in base.objects
    }
    cots = {x: cotensor_skeletal(F, days[x]) for x in base.objects}
    levels = {x: cots[x].elements for x in base.objects}
    action = {}
    for f in base.nonidentity_arrows():
        x, y = base.dom[f], base.cod[f]
        Dx, Dy = days[x], days[y]
        move = {}
        for c in base.objects:
            for cls in Dx.levels[c]:
                i, j, a, b, u = Dx.witness[(c, cls)]
                move[(c, cls)] = Dy.class_of[(c, (i, j, base.comp(f, a), b, u))]
        pos_y = {p: k for k, p in enumerate(cots[y].pairs)}
        table = {}
        for fam in levels[y]:
            table[fam] = tuple(
                fam[pos_y[(c, move[(c, cls)])]] for (c, cls) in cots[x].pairs
            )
        action[f] = table
    P = Presheaf(base, levels, action, f"cotensor({K.label})")
    P.validate()
    out = as_frame(P)
    out.days = days
    out.cots = cots
    return out


def enriched_hom(F: SetFrame, G: SetFrame) -> Presheaf:
    """The presheaf x -> frame maps from F into the x-indexed cotensor of G."""
    base = F.base
    cots = {x: frame_cotensor(representable(base, x), G) for x in base.objects}
    homs = {x: nat_set(F.presheaf, cots[x].presheaf) for x in base.objects}
    levels = {x: tuple(m.key() for m in homs[x]) for x in base.objects}
    witness = {(x, m.key()): m for x in base.objects for m in homs[x]}
    action = {}
    for f in base.nonidentity_arrows():
        x, y = base.dom[f], base.cod[f]
        Hy, Hx = cots[y], cots[x]
        table = {}
        for key in levels[y]:
            m = witness[(y, key)]
            comps = {}
            for z in base.objects:
                Dz_y, Dz_x = Hy.days[z], Hx.days[z]
                move = {}
                for (c, cls) in Hx.cots[z].pairs:
                    i, j, a, b, u = Dz_x.witness[(c, cls)]
                    move[(c, cls)] = Dz_y.class_of[(c, (i, j, a, base.comp(f, b), u))]
                pos = {p: k for k, p in enumerate(Hy.cots[z].pairs)}
                comps[z] = {
                    e: tuple(
                        m.at(z, e)[pos[(c, move[(c, cls)])]]
                        for (c, cls) in Hx.cots[z].pairs
                    )
                    for e in F.level(z)
                }
            moved = PresheafMap(F.presheaf, Hx.presheaf, comps)
            table[key] = moved.key()
        action[f] = table
    P = Presheaf(base, levels, action, "enriched-hom")
    P.validate()
    return P


def unit_cotensor_iso(F: SetFrame, H: SetFrame) -> dict:
    """Per object, the canonical bijection F(z) -> (unit cotensor of F)(z).

    H must be ``frame_cotensor(representable(unit), F)``; the class of a
    convolution element reduces to an arrow into z, along which F transports.
    """
    base = F.base
    iso = {}
    for z in base.objects:
        D = H.days[z]
        arrows = {}
        for (c, cls) in H.cots[z].pairs:
            i, j, a, b, u = D.witness[(c, cls)]
            ab = base.tensor_arr(a, base.identity[j])
            arrow = base.comp(ab, u)  # c -> z
            arrows[(c, cls)] = arrow
        table = {}
        for e in F.level(z):
            fam = tuple(
                F.act(arrows[p], e) if not base.is_identity(arrows[p]) else e
                for p in H.cots[z].pairs
            )
            table[e] = fam
        iso[z] = table
    return iso


# ---------------------------------------------------------------------------
# Limits over truncations and cone extension.
# ---------------------------------------------------------------------------


def limit_families(F: Presheaf) -> tuple[tuple, list]:
    """The limit of F over its whole base, as value tuples over the objects."""
    objs = list(F.base.objects_by_degree())
    maps = nat_set(terminal_presheaf(F.base), F)
    fams = sorted((tuple(m.at(x, "*") for x in objs) for m in maps), key=repr)
    return tuple(fams), objs


@dataclass
class ConeReport:
    components: dict
    stage_sizes: list
    comparisons_bijective: bool


def cone_extend(F: SetFrame, apex: tuple, a: dict, truncations: list) -> ConeReport:
    """Extend a map into the bottom level to a cone over the whole truncation.

    ``truncations`` is the ascending chain of sub-bases (by target dimension)
    with matching restricted frames; stage by stage, the restriction between
    stage limits must be surjective, and the canonical section (smallest
    preimage) pushes the cone one stage up.
    """
    stages = []
    for sub in truncations:
        Fr = frame_restricted_to(sub, F)
        fams, objs = limit_families(Fr)
        stages.append((sub, fams, objs))
    sub0, fams0, objs0 = stages[0]
    assert len(objs0) == 1, "bottom truncation must have a single object"
    cone = {apex_e: (a[apex_e],) for apex_e in apex}
    comparisons_bijective = True
    sizes = [len(fams0)]
    for (prev, prev_fams, prev_objs), (cur, cur_fams, cur_objs) in zip(
        stages, stages[1:]
    ):
        pos = {x: i for i, x in enumerate(cur_objs)}
        restricted = {
            fam: tuple(fam[pos[x]] for x in prev_objs) for fam in cur_fams
        }
        image = set(restricted.values())
        if not set(prev_fams) <= image:
            raise ModelViolationError(
                "stage comparison map is not surjective; the cone cannot extend"
            )
        if len(cur_fams) != len(prev_fams):
            comparisons_bijective = False
        section = {}
        for fam in cur_fams:  # smallest representative wins, deterministic
            section.setdefault(restricted[fam], fam)
        cone = {e: section[cone[e]] for e in cone}
        sizes.append(len(cur_fams))
    top_objs = stages[-1][2]
    components = {
        x: {e: cone[e][i] for e in apex} for i, x in enumerate(top_objs)
    }
    return ConeReport(components, sizes, comparisons_bijective)


def cone_is_natural(F: SetFrame, apex, components) -> bool:
    base = F.base
    for m in base.nonidentity_arrows():
        d, dp = base.dom[m], base.cod[m]
        for e in apex:
            if F.act(m, components[dp][e]) != components[d][e]:
                return False
    return True


def frame_restricted_to(sub: BaseCategory, F: SetFrame) -> Presheaf:
    """Restrict a frame's presheaf to a sub-base whose arrows are values of the big one."""
    levels = {x: F.presheaf.levels[x] for x in sub.objects}
    action = {}
    for m in sub.nonidentity_arrows():
        action[m] = dict(F.presheaf.action[m])
    return Presheaf(sub, levels, action, f"{F.presheaf.label}|sub")


# ---------------------------------------------------------------------------
# Right Kan transport along the projection.
# ---------------------------------------------------------------------------


@dataclass
class PstarReport:
    commute_ok: bool
    transported: Presheaf
    sizes_direct: dict
    sizes_restricted: dict


def pstar_limits(F: SetFrame, big_pair, small_pair) -> PstarReport:
    """Transport F along the projection, two ways, and compare.

    ``big_pair``/``small_pair`` are (marked-arrow base, functor-to-cube-base)
    pairs for the full truncation and for a sub-truncation; transporting the
    restricted frame must agree with restricting the transported one, via
    the forget-extra-slots comparison.
    """
    dr_big, p_big = big_pair
    dr_small, p_small = small_pair
    big = ran(p_big, F.presheaf)
    small = ran(p_small, frame_restricted_to(dr_small, F))
    commute = True
    sizes_direct, sizes_restricted = {}, {}
    for x in p_small.dst.objects:
        keys_small = small.slot_keys[x]
        keys_big = big.slot_keys[x]
        pos_big = {k: i for i, k in enumerate(keys_big)}
        forget = {
            fam: tuple(fam[pos_big[k]] for k in keys_small) for fam in big.levels[x]
        }
        image = set(forget.values())
        sizes_direct[x] = len(small.levels[x])
        sizes_restricted[x] = len(set(big.levels[x]))
        if image != set(small.levels[x]) or len(image) != len(big.levels[x]):
            commute = False
    return PstarReport(commute, big, sizes_direct, sizes_restricted)


def ran_unit_check(p: Functor, G: Presheaf) -> bool:
    """G -> transport of its own pullback must be a levelwise bijection."""
    RK = ran(p, restrict(p, G))
    for x in p.dst.objects:
        keys = RK.slot_keys[x]
        table = set()
        for g in G.levels[x]:
            fam = tuple(
                g if p.dst.is_identity(u) else G.act(u, g) for (d, u) in keys
            )
            table.add(fam)
        if table != set(RK.levels[x]) or len(table) != len(G.levels[x]):
            return False
    return True


# ---------------------------------------------------------------------------
# Seeded generators.
# ---------------------------------------------------------------------------


def random_frame(base: BaseCategory, rng, pad_cap: int = 2, level_cap: int = 12, label="frame") -> SetFrame:
    """Fibrant by construction: each level is matching data times padding.

    Element ``e`` at x decodes as family index ``e % k`` and padding slot
    ``e // k``.  Arrows below evaluate the family; degree-preserving arrows
    (EZ bases only) precompose it and keep the padding slot.
    """
    levels = {}
    action = {a: {} for a in base.nonidentity_arrows()}
    fam_value = {}
    P = Presheaf(base, levels, action, label)
    for x in base.objects_by_degree():
        bd, _ = _boundary_cached(base, x)
        pairs = _family_pairs(bd)
        pair_pos = {p: i for i, p in enumerate(pairs)}
        mus = nat_set(bd, P)
        if not mus:
            raise NotFibrantError(
                f"no matching families at {base.object_name(x)}; generator stuck"
            )
        vals = [tuple(m.at(y, a) for (y, a) in pairs) for m in mus]
        val_index = {v: i for i, v in enumerate(vals)}
        k = len(vals)
        pad = rng.randrange(1, pad_cap + 1)
        while pad > 1 and k * pad > level_cap:
            pad -= 1
        elems = tuple(range(k * pad))
        levels[x] = elems
        for e in elems:
            fam_value[(x, e)] = vals[e % k]
        for f in base.nonidentity_arrows():
            if base.cod[f] != x:
                continue
            y = base.dom[f]
            tab = {}
            if base.deg[y] < base.deg[x]:
                pos = pair_pos[(y, f)]
                for e in elems:
                    tab[e] = fam_value[(x, e)][pos]
            else:
                assert y == x, "degree-preserving arrow between distinct objects"
                moved_pos = [pair_pos[(yy, base.comp(f, aa))] for (yy, aa) in pairs]
                for e in elems:
                    fam = fam_value[(x, e)]
                    fi = val_index[tuple(fam[i] for i in moved_pos)]
                    tab[e] = fi + (e // k) * k
            action[f] = tab
        P = Presheaf(base, levels, action, label)
    P.validate()
    return as_frame(P)


def random_fibration(base: BaseCategory, rng, pad_cap: int = 2, level_cap: int = 12) -> FrameMap:
    """A Reedy fibration onto a random frame, built from relative matching data.

    Elements over g are pairs (g, boundary family) in the relative pullback,
    times padding, so every relative gap is surjective by construction.
    """
    G = random_frame(base, rng, pad_cap=pad_cap, level_cap=max(2, level_cap // 2), label="target")
    levels = {}
    action = {a: {} for a in base.nonidentity_arrows()}
    data = {}  # (x, e) -> (g, family value tuple)
    comp = {}
    P = Presheaf(base, levels, action, "source")
    for x in base.objects_by_degree():
        bd, _ = _boundary_cached(base, x)
        pairs = _family_pairs(bd)
        pair_pos = {p: i for i, p in enumerate(pairs)}
        mus = nat_set(bd, P)
        vals = [tuple(m.at(y, a) for (y, a) in pairs) for m in mus]
        gmatch = {
            g: tuple(G.act(a, g) for (_, a) in pairs) for g in G.level(x)
        }
        rel = [
            (g, fam)
            for g in G.level(x)
            for fam in vals
            if tuple(comp[(y, v)] for (y, _), v in zip(pairs, fam)) == gmatch[g]
        ]
        if not rel:
            raise NotFibrantError(f"empty relative matching data at {base.object_name(x)}")
        val_index = {v: i for i, v in enumerate(rel)}
        k = len(rel)
        pad = rng.randrange(1, pad_cap + 1)
        while pad > 1 and k * pad > level_cap:
            pad -= 1
        elems = tuple(range(k * pad))
        levels[x] = elems
        for e in elems:
            data[(x, e)] = rel[e % k]
            comp[(x, e)] = rel[e % k][0]
        for f in base.nonidentity_arrows():
            if base.cod[f] != x:
                continue
            y = base.dom[f]
            tab = {}
            if base.deg[y] < base.deg[x]:
                pos = pair_pos[(y, f)]
                for e in elems:
                    tab[e] = data[(x, e)][1][pos]
            else:
                assert y == x
                moved_pos = [pair_pos[(yy, base.comp(f, aa))] for (yy, aa) in pairs]
                for e in elems:
                    g, fam = data[(x, e)]
                    moved = (G.act(f, g), tuple(fam[i] for i in moved_pos))
                    fi = val_index[moved]
                    tab[e] = fi + (e // k) * k
            action[f] = tab
        P = Presheaf(base, levels, action, "source")
    P.validate()
    F = as_frame(P)
    q = PresheafMap(
        F.presheaf,
        G.presheaf,
        {x: {e: comp[(x, e)] for e in F.level(x)} for x in base.objects},
    )
    return FrameMap(F, G, q)


def product_frame(F: SetFrame, G: SetFrame) -> SetFrame:
    base = F.base
    levels = {x: tuple(itertools.product(F.level(x), G.level(x))) for x in base.objects}
    action = {
        a: {
            (e, g): (F.act(a, e), G.act(a, g))
            for (e, g) in levels[base.cod[a]]
        }
        for a in base.nonidentity_arrows()
    }
    P = Presheaf(base, levels, action, "product")
    return as_frame(P)


def diagonal_map(F: SetFrame) -> FrameMap:
    """The levelwise-injective comparison into the square."""
    sq = product_frame(F, F)
    m = PresheafMap(
        F.presheaf,
        sq.presheaf,
        {x: {e: (e, e) for e in F.level(x)} for x in F.base.objects},
    )
    return FrameMap(F, sq, m)


def permuted_copy(F: SetFrame, rng) -> FrameMap:
    """A levelwise-bijective frame map onto a relabeled copy."""
    base = F.base
    sigma = {}
    for x in base.objects:
        perm = list(F.level(x))
        rng.shuffle(perm)
        sigma[x] = dict(zip(F.level(x), perm))
    levels = {x: tuple(F.level(x)) for x in base.objects}
    action = {}
    for a in base.nonidentity_arrows():
        x, y = base.dom[a], base.cod[a]
        inv = {v: k for k, v in sigma[y].items()}
        action[a] = {e: sigma[x][F.act(a, inv[e])] for e in levels[y]}
    P = Presheaf(base, levels, action, "copy")
    G = as_frame(P)
    m = PresheafMap(
        F.presheaf, P, {x: {e: sigma[x][e] for e in F.level(x)} for x in base.objects}
    )
    return FrameMap(F, G, m)


def coboundary_presheaf(base: BaseCategory, rng, size: int, label="bijective") -> Presheaf:
    """All structure maps bijective: transport by composable relabelings."""
    psi = {}
    for x in base.objects:
        perm = list(range(size))
        rng.shuffle(perm)
        psi[x] = perm
    inv = {x: {v: i for i, v in enumerate(psi[x])} for x in base.objects}
    levels = {x: tuple(range(size)) for x in base.objects}
    action = {}
    for a in base.nonidentity_arrows():
        d, dp = base.dom[a], base.cod[a]
        action[a] = {e: psi[d][inv[dp][e]] for e in levels[dp]}
    P = Presheaf(base, levels, action, label)
    P.validate()
    return P


def coboundary_frame(base: BaseCategory, rng, size: int, label="bijective") -> SetFrame:
    return as_frame(coboundary_presheaf(base, rng, size, label))


def bijective_fibrant_size(base: BaseCategory, rng, max_size: int = 3) -> int:
    """Largest level size at which an all-bijective diagram stays fibrant."""
    for size in range(max_size, 0, -1):
        try:
            coboundary_frame(base, rng, size)
            return size
        except NotFibrantError:
            continue
    raise NotFibrantError("no all-bijective fibrant diagram at any size")


def pullback_frame(p: Functor, G: SetFrame) -> SetFrame:
    """Restrict a cube-base frame along the projection and re-certify."""
    return as_frame(restrict(p, G.presheaf))