#pragma once

#include <span>
#include <vector>

#include "cssi/parent_set.hpp"

namespace cssi {

/// Maps parent variables onto coordinates of the flat input vector.
/// Variable j occupies coordinates [offset(j), offset(j) + widths[j]).
struct VariableLayout {
    std::vector<int> widths;

    static VariableLayout scalars(int d) { return VariableLayout{std::vector<int>(static_cast<std::size_t>(d), 1)}; }

    int count() const { return static_cast<int>(widths.size()); }
    int total_dim() const;
    int offset(int j) const;
    /// Coordinate index -> owning variable.
    std::vector<int> owners() const;
    /// Concatenated coordinates of the variables in `vars`, ascending.
    std::vector<double> gather(std::span<const double> x, ParentSet vars) const;

    bool operator==(const VariableLayout&) const = default;
};

}  // namespace cssi
