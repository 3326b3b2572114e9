#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <ostream>
#include <variant>
#include <vector>

#include "bbsi/errors.hpp"

namespace bbsi {

struct Winner {
  std::size_t index = 0;
  auto operator<=>(const Winner&) const = default;
};

struct Support {
  std::vector<std::size_t> indices;
  auto operator<=>(const Support&) const = default;
};

struct RejectionSet {
  std::vector<std::size_t> indices;
  auto operator<=>(const RejectionSet&) const = default;
};

struct StoppedAt {
  std::size_t stage = 0;
  auto operator<=>(const StoppedAt&) const = default;
};

/// Outcome of a selection algorithm. Equality is structural.
using ModelId = std::variant<Winner, Support, RejectionSet, StoppedAt>;

/// Sorts and de-duplicates an index set in place.
inline std::vector<std::size_t> canonical_indices(std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

inline std::ostream& operator<<(std::ostream& os, const ModelId& m) {
  auto list = [&](const char* tag, const std::vector<std::size_t>& v) {
    os << tag << '{';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '}';
  };
  std::visit(
      [&](const auto& alt) {
        using T = std::decay_t<decltype(alt)>;
        if constexpr (std::is_same_v<T, Winner>) os << "Winner(" << alt.index << ')';
        else if constexpr (std::is_same_v<T, Support>) list("Support", alt.indices);
        else if constexpr (std::is_same_v<T, RejectionSet>) list("RejectionSet", alt.indices);
        else os << "StoppedAt(" << alt.stage << ')';
      },
      m);
  return os;
}

}  // namespace bbsi
