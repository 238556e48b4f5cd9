#pragma once

// Leave-one-out products shared by the belief and survey solvers.

#include <cstddef>
#include <span>
#include <vector>

namespace spw::detail {

/// out[k] = product of all factors except factors[k], via prefix and suffix
/// folds so that no division is needed. `Mul` must be associative and
/// `identity` its neutral element.
template <class V, class Mul>
void leave_one_out(std::span<const V> factors, V identity, Mul mul, std::vector<V>& prefix,
                   std::vector<V>& out) {
  const std::size_t n = factors.size();
  prefix.resize(n + 1);
  out.resize(n);
  prefix[0] = identity;
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = mul(prefix[k], factors[k]);
  V suffix = identity;
  for (std::size_t k = n; k-- > 0;) {
    out[k] = mul(prefix[k], suffix);
    suffix = mul(factors[k], suffix);
  }
}

}  // namespace spw::detail
