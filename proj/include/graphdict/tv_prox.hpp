#pragma once

#include "graphdict/edge_space.hpp"

namespace graphdict {

// argmin_v 1/2 |v - y|^2 + lambda * sum_i |v_{i+1} - v_i|
// Condat's direct (taut-string style) algorithm, O(n) typical.
Vector tv1d_prox(const Vector& y, double lambda);

}  // namespace graphdict
