#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "incmesh/featurenet.hpp"
#include "incmesh/geometry.hpp"
#include "incmesh/rng.hpp"

namespace incmesh {

// Fixed-capacity set of background feature vectors with per-entry age
// counters; replacement always evicts the oldest entries.
struct BackgroundBank {
    Eigen::MatrixXd features;        // dim x capacity
    std::vector<std::int64_t> ages;  // update steps survived

    int capacity() const { return static_cast<int>(features.cols()); }

    static BackgroundBank make(int dim, int capacity, std::uint64_t seed);
};

struct BankUpdateResult {
    bool updated = false;  // false when the render left no background pixels
};

// Samples n_new features from pixels that are off the object mask and not
// matched to any vertex, evicts the n_new oldest entries, ages the rest.
BankUpdateResult bg_update(BackgroundBank& bank, const FeatureMap& features,
                           const RenderResult& render, int n_new, Rng& rng);

}  // namespace incmesh
