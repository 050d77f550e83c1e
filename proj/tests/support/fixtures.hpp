#pragma once

#include <random>
#include <vector>

#include "pathnewton/instance.hpp"

namespace pathnewton::testing {

// Two paths, one block, two arcs; every cost z^2/2. Path 0 crosses both
// arcs, path 1 only the second. At x=(1,1): F=3.5, g=(4,3),
// H=[[3,1],[1,2]].
NetworkInstance t1_instance();

// One path priced by -2x against a single KleinrockDelay arc with cap 2;
// minimizer x*=1 with F=-1.
NetworkInstance kleinrock_scalar();

// Two decoupled quadratic paths with x0+x1=1; x*=(0.5,0.5), multiplier -0.5.
NetworkInstance qp2_instance();

// t1_instance plus the row x0+x1=2; x*=(2/3,4/3), multiplier -10/3.
NetworkInstance t1_eq_instance();

// Two paths sharing one quadratic arc, linear path costs: the Hessian is
// the all-ones matrix, rank-deficient by construction.
NetworkInstance singular_instance();

// n paths, each alone on its own arc: the Hessian is diagonal.
NetworkInstance diag_instance(int n);

// One path with minimizer at -1 but marked nonnegative; x*=0.
NetworkInstance bound_instance();

struct RandomOptions {
  int max_paths = 20;
  int max_total_arcs = 10;
  int max_blocks = 3;
  bool spd = true;             // strongly convex path costs (Quadratic q>0)
  bool arc_variety = true;     // mix Zero/Quadratic/PowerMonomial/Kleinrock arcs
  double orphan_arc_prob = 0.1;
};

// Instance drawn inside the desk-scale envelope. Every point produced by
// random_point (componentwise in [0.05, 1]) is strictly feasible: weights
// are positive, monomial arcs see nonnegative flow, and Kleinrock caps
// clear the largest reachable flow by a fixed margin.
NetworkInstance random_instance(std::mt19937_64& rng, const RandomOptions& opts = {});

std::vector<double> random_point(std::mt19937_64& rng, const NetworkInstance& instance);

} // namespace pathnewton::testing
