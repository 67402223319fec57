#pragma once

// Umbrella header: mean-field magnetizations and convergence theory for
// bipartite spin models with rotation-invariant couplings.

#include "bitap/dft.hpp"
#include "bitap/ensembles.hpp"
#include "bitap/enumeration.hpp"
#include "bitap/errors.hpp"
#include "bitap/generating.hpp"
#include "bitap/harness.hpp"
#include "bitap/io.hpp"
#include "bitap/linear_response.hpp"
#include "bitap/order_params.hpp"
#include "bitap/quadrature.hpp"
#include "bitap/rng.hpp"
#include "bitap/tap.hpp"
