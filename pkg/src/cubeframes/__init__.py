"""Exact combinatorial calculus for semi-cube shapes and set-valued diagrams.

The package has four layers:

* ``cubes``      -- morphism normal forms for the augmented semi-simplex
                    category and for semi-cubes with or without symmetries
                    and reversals, plus an affine-map semantics oracle.
* ``presheaves`` -- finite set-valued presheaves over presented base
                    categories: boundaries, skeletal filtrations, natural
                    transformation sets, convolution products and Kan
                    extensions along a functor.
* ``dr``         -- the marked-arrow category over the symmetric semi-cube
                    base: word normal forms, truncated builds, directness
                    and nerve-collapse checks, and the projection functor.
* ``frames``     -- the finite-set frame oracle: matching objects, skeletal
                    cotensors, gap maps, cone extension, and right Kan
                    transport of frames, each cross-checked by brute force.

``checks`` bundles the property suites behind the ``cubeframes check``
command line; ``cli`` is the entry point.
"""

__version__ = "0.1.0"
