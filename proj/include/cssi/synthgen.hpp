#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "cssi/dataset.hpp"
#include "cssi/scm.hpp"

namespace cssi {

enum class ParentLayout {
    uniform,     // {X1,X2,X3}, {X4,X5,X6}, {X7,X8,X9}
    nonuniform,  // full set, {X1,X2,X3}, {X4,..,X9}
};

enum class Boundary { linear_argmax, norm_band, nonlinear_argmax };

struct SynthConfig {
    int d = 9;
    ParentLayout layout = ParentLayout::uniform;
    Boundary boundary = Boundary::linear_argmax;
    NoiseKind noise = NoiseKind::non_additive;
    std::uint64_t seed = 0;
    std::size_t n_samples = 50000;
    std::array<double, 3> split{0.8, 0.1, 0.1};
    int mechanism_hidden = 10;  // one tanh hidden layer

    /// Throws InvalidConfig naming the offending field.
    void validate() const;
};

const char* to_string(ParentLayout layout);
const char* to_string(Boundary boundary);
ParentLayout parent_layout_from_string(const std::string& s);
Boundary boundary_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& cfg);

struct NormThresholds {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// 1/3 and 2/3 quantiles of ||x|| for x ~ N(0, I_d), from 1e5 draws.
NormThresholds calibrate_norm_thresholds(int d, std::uint64_t seed);

/// Minimum share every argmax region must reach on a probe sample before a
/// boundary draw is accepted.
inline constexpr double kMinRegionMass = 0.05;

/// Parents ~ N(0, I), noise ~ N(0, 1), random mechanisms per region. Argmax
/// boundaries whose regions are badly unbalanced are redrawn.
Scm build_config(const SynthConfig& cfg);

enum class Example { example1, example2, canonical_example, toy2d };

Example example_from_string(const std::string& s);
const char* to_string(Example e);

/// Worked examples with their decompositions. `noise_std` scales U.
/// `seed` only matters for toy2d, whose mechanisms are random networks.
Scm make_example(Example which, double noise_std = 0.1, std::uint64_t seed = 0);

/// Radius of the toy2d ball: sqrt of the chi-square(6) median, so both
/// regions hold half the mass.
double toy2d_epsilon();

struct Splits {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

/// Deterministic shuffle under `seed`, then consecutive blocks of sizes
/// round(n * r_train), round(n * r_val) and the rest. Throws EmptySplit if a
/// split with a positive ratio ends up empty.
Splits split(const LabeledDataset& ds, std::array<double, 3> ratios, std::uint64_t seed);

/// build_config + sample, with the config recorded in the metadata.
LabeledDataset generate(const SynthConfig& cfg);

}  // namespace cssi
