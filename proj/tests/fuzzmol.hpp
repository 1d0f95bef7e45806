//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//
// Random valence-valid heavy-atom molecules for round-trip and property
// tests: a random spanning tree plus occasional ring-closing edges, with
// bond orders capped by per-element valence budgets.
#pragma once

#include "unimomo/blockgraph.hpp"
#include "unimomo/random.hpp"

namespace unimomo::test {

// Connected molecule with min_atoms..max_atoms atoms drawn from {C,N,O,S},
// distinct coordinates, and valences within element maxima.
MolGraph random_molecule(RandomStream& rng, int min_atoms = 2,
                         int max_atoms = 12);

}  // namespace unimomo::test
