import random

import pytest

from cubeframes.dr import ZERO_OBJECT, build_dr, projection_functor
from cubeframes.frames import (
    ModelViolationError,
    NotFibrantError,
    as_frame,
    bijective_fibrant_size,
    cone_extend,
    cone_is_natural,
    coboundary_frame,
    cotensor_oracle_report,
    cotensor_postcompose,
    cotensor_skeletal,
    diagonal_map,
    enriched_hom,
    frame_restricted_to,
    gap_map,
    induced_factorization_check,
    is_fibrant,
    matching_object,
    permuted_copy,
    product_frame,
    pstar_limits,
    pullback_frame,
    ran_unit_check,
    random_fibration,
    random_frame,
    frame_cotensor,
    unit_cotensor_iso,
    limit_families,
)
from cubeframes.presheaves import (
    Presheaf,
    boundary,
    cube_base,
    nat_set,
    representable,
    restrict,
    random_presheaf,
    random_subpresheaf,
    subpresheaf,
    terminal_presheaf,
)

PLAIN2 = cube_base(2, symmetric=False)
SYM2 = cube_base(2, symmetric=True)


def edge_pair_frame(S):
    """Vertices S, edges S x S with the two endpoint projections."""
    d0, d1 = PLAIN2.hom(0, 1)
    faces2 = PLAIN2.hom(1, 2)
    verts2 = PLAIN2.hom(0, 2)
    edges = tuple((a, b) for a in S for b in S)
    squares = tuple((p, q) for p in edges for q in edges)
    action = {d0: {e: e[0] for e in edges}, d1: {e: e[1] for e in edges}}
    # square (p, q): rows p, q; columns induced
    for f in faces2:
        ent = f.entries
        if ent[0] == 0:
            action[f] = {s: s[0] for s in squares}
        elif ent[0] == 1:
            action[f] = {s: s[1] for s in squares}
        elif ent[1] == 0:
            action[f] = {s: (s[0][0], s[1][0]) for s in squares}
        else:
            action[f] = {s: (s[0][1], s[1][1]) for s in squares}
    for v in verts2:
        e0, e1 = v.entries
        action[v] = {s: s[e0][e1] for s in squares}
    P = Presheaf(PLAIN2, {0: tuple(S), 1: edges, 2: squares}, action, "edge-pairs")
    P.validate()
    return P


def test_matching_of_edge_pair_frame_is_bijective():
    P = edge_pair_frame((0, 1))
    fams, to_match, pairs = matching_object(P, 1)
    assert len(fams) == len(P.levels[0]) ** 2 == 4
    assert sorted(map(repr, to_match.values())) == sorted(map(repr, fams))
    assert as_frame(P)  # certifies


def test_matching_at_degree_zero_is_singleton():
    P = edge_pair_frame((0, 1))
    fams, _, _ = matching_object(P, 0)
    assert len(fams) == 1


def test_non_fibrant_rejected():
    d0, d1 = PLAIN2.hom(0, 1)
    levels = {0: (0, 1), 1: ((0, 0),), 2: ()}
    action = {d0: {(0, 0): 0}, d1: {(0, 0): 0}}
    for a in PLAIN2.nonidentity_arrows():
        action.setdefault(a, {})
    P = Presheaf(PLAIN2, levels, action, "gappy")
    P.validate()
    assert not is_fibrant(P)
    with pytest.raises(NotFibrantError):
        as_frame(P)


def test_random_frames_are_fibrant_and_varied():
    rng = random.Random(2)
    sizes = set()
    for _ in range(10):
        F = random_frame(PLAIN2, rng)
        F.presheaf.validate()
        sizes.add(tuple(len(F.level(x)) for x in PLAIN2.objects))
    assert len(sizes) > 1


def test_random_frame_on_symmetric_base():
    rng = random.Random(3)
    F = random_frame(SYM2, rng)
    F.presheaf.validate()


def test_random_frame_on_marked_arrow_base():
    rng = random.Random(4)
    F = random_frame(build_dr(1), rng)
    F.presheaf.validate()


def test_cotensor_by_representable_is_level():
    rng = random.Random(5)
    F = random_frame(PLAIN2, rng)
    for x in PLAIN2.objects:
        cot = cotensor_skeletal(F, representable(PLAIN2, x))
        assert len(cot.elements) == len(F.level(x))


def test_cotensor_dimension_zero_is_product():
    rng = random.Random(6)
    F = random_frame(PLAIN2, rng)
    K, _ = subpresheaf(
        representable(PLAIN2, 1), {0: representable(PLAIN2, 1).levels[0]}
    )
    cot = cotensor_skeletal(F, K)
    assert len(cot.elements) == len(F.level(0)) ** len(K.levels[0])


def test_cotensor_matches_oracle_on_boundary():
    rng = random.Random(7)
    for _ in range(5):
        F = random_frame(PLAIN2, rng)
        b, _ = boundary(PLAIN2, 2)
        rep = cotensor_oracle_report(F, b)
        assert rep["bijection_ok"]


def test_cotensor_matches_oracle_on_random_subpresheaves():
    rng = random.Random(8)
    F = random_frame(PLAIN2, rng)
    for _ in range(8):
        L = representable(PLAIN2, rng.choice((1, 2)))
        K, _ = random_subpresheaf(L, rng)
        assert cotensor_oracle_report(F, K)["bijection_ok"]


def test_gap_identity_mono():
    rng = random.Random(9)
    q = random_fibration(PLAIN2, rng)
    K = representable(PLAIN2, 1)
    from cubeframes.presheaves import identity_map

    rep = gap_map(identity_map(K), q)
    assert rep.surjective and rep.chain_surjective and rep.chain_composes_to_direct


def test_gap_empty_source():
    rng = random.Random(10)
    q = random_fibration(PLAIN2, rng)
    from cubeframes.presheaves import empty_presheaf, PresheafMap

    L = representable(PLAIN2, 1)
    K = empty_presheaf(PLAIN2)
    i = PresheafMap(K, L, {})
    rep = gap_map(i, q)
    assert rep.ok


def test_gap_random_instances():
    rng = random.Random(11)
    for _ in range(6):
        q = random_fibration(PLAIN2, rng)
        L = random_presheaf(PLAIN2, rng, max_per_level=3)
        K, i = random_subpresheaf(L, rng)
        rep = gap_map(i, q)
        assert rep.ok, rep


def test_gap_bijective_for_bijective_fibration():
    rng = random.Random(12)
    F = random_frame(PLAIN2, rng)
    q = permuted_copy(F, rng)
    assert q.levelwise_bijective and q.reedy_fibration
    L = random_presheaf(PLAIN2, rng, max_per_level=3)
    K, i = random_subpresheaf(L, rng)
    rep = gap_map(i, q)
    assert rep.ok and rep.bijective


def test_injective_map_gives_injective_cotensor_action():
    rng = random.Random(13)
    F = random_frame(PLAIN2, rng, pad_cap=2, level_cap=8)
    d = diagonal_map(F)
    assert d.levelwise_injective
    K, _ = random_subpresheaf(representable(PLAIN2, 2), rng)
    C_F = cotensor_skeletal(F, K)
    C_G = cotensor_skeletal(d.target, K)
    табle = cotensor_postcompose(C_F, d, C_G)
    assert len(set(табle.values())) == len(C_F.elements)


def test_induced_factorization():
    rng = random.Random(14)
    q = random_fibration(PLAIN2, rng)
    for _ in range(3):
        L = random_presheaf(PLAIN2, rng, max_per_level=3)
        assert induced_factorization_check(q, L)


def test_surjections_transport_to_cotensors():
    rng = random.Random(15)
    q = random_fibration(PLAIN2, rng)
    K = random_presheaf(PLAIN2, rng, max_per_level=3)
    C_F = cotensor_skeletal(q.source, K)
    C_G = cotensor_skeletal(q.target, K)
    table = cotensor_postcompose(C_F, q, C_G)
    assert set(table.values()) == set(C_G.elements)


def test_frame_cotensor_unit_law():
    rng = random.Random(16)
    F = random_frame(PLAIN2, rng, pad_cap=2, level_cap=6)
    H = frame_cotensor(representable(PLAIN2, 0), F)
    iso = unit_cotensor_iso(F, H)
    for z in PLAIN2.objects:
        vals = list(iso[z].values())
        assert len(set(vals)) == len(vals) == len(F.level(z))
        assert set(vals) == set(H.level(z))


def test_frame_cotensor_is_fibrant_presheaf():
    rng = random.Random(17)
    F = random_frame(PLAIN2, rng, pad_cap=2, level_cap=6)
    K, _ = random_subpresheaf(representable(PLAIN2, 1), rng)
    H = frame_cotensor(K, F)
    H.presheaf.validate()


def test_enriched_hom_contains_identity_at_unit():
    rng = random.Random(18)
    F = random_frame(cube_base(1, symmetric=False), rng, pad_cap=2, level_cap=4)
    hom = enriched_hom(F, F)
    hom.validate()
    H = frame_cotensor(representable(F.base, 0), F)
    iso = unit_cotensor_iso(F, H)
    from cubeframes.presheaves import PresheafMap

    ident = PresheafMap(F.presheaf, H.presheaf, {z: iso[z] for z in F.base.objects})
    assert ident.key() in set(hom.levels[0])


# -- cone extension over the marked-arrow base --------------------------------


def test_cone_constant_singleton():
    subs = [build_dr(0), build_dr(1), build_dr(2)]
    F = coboundary_frame(subs[-1], random.Random(0), 1)
    apex = ("p", "q")
    a = {"p": 0, "q": 0}
    rep = cone_extend(F, apex, a, subs)
    assert cone_is_natural(F, apex, rep.components)
    assert rep.comparisons_bijective


def test_bijective_fibrant_frames_degenerate_on_wide_base():
    # both marker routings sit in the boundary of a marked object, so an
    # all-bijective diagram can only fill the matching square at size one
    base = build_dr(2)
    with pytest.raises(NotFibrantError):
        coboundary_frame(base, random.Random(1), 2)
    assert bijective_fibrant_size(base, random.Random(1)) == 1


def test_cone_all_bijective_fibrant_frames():
    subs = [build_dr(0), build_dr(1), build_dr(2)]
    for seed in range(5):
        rng = random.Random(seed)
        size = bijective_fibrant_size(subs[-1], rng)
        F = coboundary_frame(subs[-1], rng, size)
        apex = tuple(range(rng.randrange(1, 4)))
        a = {e: rng.choice(F.level(ZERO_OBJECT)) for e in apex}
        rep = cone_extend(F, apex, a, subs)
        assert cone_is_natural(F, apex, rep.components)
        assert all(rep.components[ZERO_OBJECT][e] == a[e] for e in apex)
        assert rep.comparisons_bijective


def test_cone_on_narrow_base_is_nondegenerate():
    subs = [build_dr(n, dom_markers=False) for n in (0, 1, 2)]
    rng = random.Random(3)
    F = coboundary_frame(subs[-1], rng, 3)
    apex = (0, 1, 2)
    a = {e: e for e in apex}
    rep = cone_extend(F, apex, a, subs)
    assert cone_is_natural(F, apex, rep.components)
    assert all(rep.components[ZERO_OBJECT][e] == a[e] for e in apex)


def test_limit_of_bijective_diagram_matches_bottom_level():
    from cubeframes.frames import coboundary_presheaf

    base = build_dr(2)
    P = coboundary_presheaf(base, random.Random(2), 3)
    fams, objs = limit_families(P)
    assert len(fams) == 3


# -- transport along the projection ------------------------------------------


def test_pullback_frames_certify_only_when_levelwise_trivial():
    # the two marker routings impose a square's worth of matching data on a
    # pulled-back diagram, so only singleton levels survive certification
    p = projection_functor(build_dr(2), SYM2)
    G1 = as_frame(terminal_presheaf(SYM2))
    F = pullback_frame(p, G1)
    F.presheaf.validate()
    rng = random.Random(19)
    G = random_frame(SYM2, rng, pad_cap=2, level_cap=6)
    if any(len(G.level(x)) > 1 for x in SYM2.objects):
        with pytest.raises(NotFibrantError):
            pullback_frame(p, G)
    # over the narrow variant the pullback of any frame certifies
    narrow = build_dr(2, dom_markers=False)
    p_narrow = projection_functor(narrow, SYM2)
    pullback_frame(p_narrow, G).presheaf.validate()


def test_ran_unit_on_small_presheaf():
    rng = random.Random(20)
    sym1 = cube_base(1, symmetric=True)
    p = projection_functor(build_dr(1), sym1)
    G = random_frame(sym1, rng, pad_cap=2, level_cap=4).presheaf
    assert ran_unit_check(p, G)


def test_pstar_singleton():
    dr1 = build_dr(1)
    sym1 = cube_base(1, symmetric=True)
    p1 = projection_functor(dr1, sym1)
    F = as_frame(terminal_presheaf(dr1))
    from cubeframes.presheaves import ran

    R = ran(p1, F.presheaf)
    assert all(len(R.levels[x]) == 1 for x in sym1.objects)


def test_pstar_commutes_with_truncation():
    rng = random.Random(21)
    dr2, dr1 = build_dr(2), build_dr(1)
    sym2 = cube_base(2, symmetric=True)
    sym1 = cube_base(1, symmetric=True)
    p2 = projection_functor(dr2, sym2)
    p1 = projection_functor(dr1, sym1)
    F = random_frame(dr2, rng, pad_cap=2, level_cap=6)
    rep = pstar_limits(F, (dr2, p2), (dr1, p1))
    assert rep.commute_ok


def test_reduction_of_cotensor_to_pullback():
    # transformation sets over the symmetric base agree with transformation
    # sets of pulled-back data over the marked-arrow base, lifted pointwise
    rng = random.Random(22)
    dr2 = build_dr(2)
    p = projection_functor(dr2, SYM2)
    G = random_frame(SYM2, rng, pad_cap=2, level_cap=6)
    PG = restrict(p, G.presheaf)
    for _ in range(3):
        L = representable(SYM2, rng.choice((1, 2)))
        K, _ = random_subpresheaf(L, rng)
        PK = restrict(p, K)
        downstairs = nat_set(K, G.presheaf)
        upstairs = nat_set(PK, PG)
        assert len(upstairs) == len(downstairs)
        pairs = [(d, e) for d in dr2.objects_by_degree() for e in PK.levels[d]]
        lifted = {
            tuple(m.at(p.ob[d], e) for (d, e) in pairs) for m in downstairs
        }
        built = {tuple(m.at(d, e) for (d, e) in pairs) for m in upstairs}
        assert lifted == built
