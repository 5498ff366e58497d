#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atvmc/errors.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

/// Complex variational parameters plus the boolean active mask the adaptive
/// controller mutates. Frozen (inactive) entries keep their value bit-for-bit
/// across time steps; only the controller flips the mask, and only between
/// estimator refreshes.
struct ParameterState {
  VectorXc values;
  std::vector<std::uint8_t> active;  // 1 = evolving, 0 = frozen
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(values.size()); }

  void require_consistent() const {
    if (static_cast<int>(active.size()) != size() ||
        static_cast<int>(labels.size()) != size()) {
      throw ShapeError("ParameterState: values/active/labels length mismatch");
    }
  }

  bool is_active(int k) const { return active[static_cast<std::size_t>(k)] != 0; }

  int active_count() const {
    int count = 0;
    for (auto a : active) count += (a != 0);
    return count;
  }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    idx.reserve(active.size());
    for (int k = 0; k < size(); ++k) {
      if (active[k]) idx.push_back(k);
    }
    return idx;
  }

  std::vector<int> frozen_indices() const {
    std::vector<int> idx;
    for (int k = 0; k < size(); ++k) {
      if (!active[k]) idx.push_back(k);
    }
    return idx;
  }
};

}  // namespace atvmc
