#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cssi {

/// Subset of a target's parent variables, stored as a bitmask.
///
/// Bit j (0-based) stands for parent variable X_{j+1}; the decimal value of
/// the mask is what the dataset files store in their parent_mask columns.
class ParentSet {
public:
    static constexpr int kMaxParents = 64;

    constexpr ParentSet() = default;
    constexpr explicit ParentSet(std::uint64_t bits) : bits_(bits) {}

    /// {X_1, ..., X_d}.
    static constexpr ParentSet full(int d) {
        return ParentSet(d >= kMaxParents ? ~std::uint64_t{0} : (std::uint64_t{1} << d) - 1);
    }
    /// Build from 0-based variable indices.
    static ParentSet of(std::initializer_list<int> indices);
    static ParentSet of(const std::vector<int>& indices);

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr int size() const { return std::popcount(bits_); }
    constexpr bool contains(int j) const { return (bits_ >> j) & 1U; }

    constexpr ParentSet with(int j) const { return ParentSet(bits_ | (std::uint64_t{1} << j)); }
    constexpr ParentSet without(int j) const { return ParentSet(bits_ & ~(std::uint64_t{1} << j)); }

    constexpr bool is_subset_of(ParentSet other) const { return (bits_ & ~other.bits_) == 0; }
    constexpr bool is_proper_subset_of(ParentSet other) const {
        return is_subset_of(other) && bits_ != other.bits_;
    }

    constexpr ParentSet operator&(ParentSet o) const { return ParentSet(bits_ & o.bits_); }
    constexpr ParentSet operator|(ParentSet o) const { return ParentSet(bits_ | o.bits_); }
    /// Set difference.
    constexpr ParentSet operator-(ParentSet o) const { return ParentSet(bits_ & ~o.bits_); }
    constexpr ParentSet complement(int d) const { return full(d) - *this; }

    /// Ascending 0-based member indices.
    std::vector<int> indices() const;
    /// e.g. "{X1,X3}".
    std::string to_string() const;

    constexpr auto operator<=>(const ParentSet&) const = default;

private:
    std::uint64_t bits_ = 0;
};

}  // namespace cssi
