"""The two marker-routing readings and why the wide one is the default.

A marker heading into a marked object can ride in either twisted leg: the
pair ``(u=[rev], v=id)`` satisfies the equation and the letter budget next
to its codomain-leg twin ``(u=id, v=[rev])``.  Keeping both (the wide
reading, the default) is forced by transport along the projection: the
domain-marker morphism projects to an identity, and exactly that identity
constraint collapses the monodromy that otherwise makes the transport unit
non-bijective.  The price is the collapse zig-zag: no choice of collapse
image makes the unit transformation natural at a domain-marker morphism,
because the composite around the square strands the marker inside ``u``
where the components cannot reproduce it.  The narrow reading trades these
properties the other way around.  Both failure modes are pinned here.
"""

import random

from cubeframes.cubes import REVERSAL, cube_identity, simplex_identity
from cubeframes.dr import (
    DrObject,
    build_dr,
    collapse_object,
    collapse_morphism,
    dr_compose,
    enumerate_drhom,
    projection_functor,
    unit_component,
    zigzag_check,
)
from cubeframes.frames import random_frame, ran_unit_check
from cubeframes.presheaves import cube_base

E1 = DrObject(simplex_identity(0), cube_identity(1))
X1 = DrObject(simplex_identity(0), REVERSAL)


def marker_in_dom():
    (extra,) = [m for m in enumerate_drhom(E1, X1) if m.u.free_count == 1]
    return extra


def test_wide_hom_has_the_extra_morphism():
    wide = enumerate_drhom(E1, X1)
    narrow = enumerate_drhom(E1, X1, dom_markers=False)
    assert len(wide) == 2 and len(narrow) == 1
    assert set(narrow) < set(wide)


def test_extra_morphism_breaks_unit_naturality():
    extra = marker_in_dom()
    outer = dr_compose(unit_component(X1), extra)
    dE1, dX1 = collapse_object(E1), collapse_object(X1)
    candidates = enumerate_drhom(dE1, dX1)
    assert candidates  # the collapsed hom-set is inhabited
    for dm in candidates:
        assert dr_compose(dm, unit_component(E1)) != outer
    # in particular the canonical collapse image does not help
    assert dr_compose(collapse_morphism(extra), unit_component(E1)) != outer


def test_codomain_twin_square_commutes():
    (twin,) = [m for m in enumerate_drhom(E1, X1) if m.u.free_count == 0]
    outer = dr_compose(unit_component(X1), twin)
    assert dr_compose(collapse_morphism(twin), unit_component(E1)) == outer


def test_narrow_base_zigzag_is_natural():
    assert zigzag_check(build_dr(2, dom_markers=False)).ok


def test_narrow_base_breaks_transport_unit():
    sym1 = cube_base(1, symmetric=True)
    rng = random.Random(20)
    G = random_frame(sym1, rng, pad_cap=2, level_cap=4).presheaf
    wide = projection_functor(build_dr(1), sym1)
    narrow = projection_functor(build_dr(1, dom_markers=False), sym1)
    assert ran_unit_check(wide, G)
    assert not ran_unit_check(narrow, G)
