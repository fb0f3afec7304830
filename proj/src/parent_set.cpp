#include "cssi/parent_set.hpp"

#include "cssi/error.hpp"

namespace cssi {

ParentSet ParentSet::of(std::initializer_list<int> indices) {
    return of(std::vector<int>(indices));
}

ParentSet ParentSet::of(const std::vector<int>& indices) {
    std::uint64_t bits = 0;
    for (int j : indices) {
        if (j < 0 || j >= kMaxParents) throw InvalidConfig("parent index out of range: " + std::to_string(j));
        bits |= std::uint64_t{1} << j;
    }
    return ParentSet(bits);
}

std::vector<int> ParentSet::indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
}

std::string ParentSet::to_string() const {
    std::string s = "{";
    bool first = true;
    for (int j : indices()) {
        if (!first) s += ',';
        s += 'X' + std::to_string(j + 1);
        first = false;
    }
    return s + '}';
}

}  // namespace cssi
