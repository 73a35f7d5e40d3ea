#pragma once
#include <cstdint>
#include <map>
#include <vector>

#include "incmesh/geometry.hpp"

namespace incmesh {

// Stored by reference: the buffer keeps sample ids and poses, never features,
// since the extractor drifts and features must be recomputed on replay.
struct Exemplar {
    std::int64_t sample_id = -1;
    int class_id = -1;
    Pose pose;
    int azimuth_bin = 0;
};

int azimuth_bin_of(double azimuth, int bins);

struct SelectionResult {
    std::vector<Exemplar> exemplars;
    bool exhausted = false;  // fewer candidates than requested slots
};

// Pose-aware selection: b equal-width azimuth bins over [0,2pi), floor(m/b)
// random picks per bin; bins with too few samples merge into their right
// neighbor (wrapping); any remaining slots fill up from the unselected rest.
SelectionResult select_exemplars(const std::vector<Exemplar>& candidates, int slots, int bins,
                                 std::uint64_t seed);

class ReplayBuffer {
public:
    ReplayBuffer() = default;
    ReplayBuffer(int capacity, int bins) : capacity_(capacity), bins_(bins) {}

    int capacity() const { return capacity_; }
    int bins() const { return bins_; }
    int total() const;
    int class_count() const { return static_cast<int>(per_class_.size()); }
    std::vector<int> class_ids() const;
    const std::vector<Exemplar>& exemplars_of(int class_id) const;
    std::vector<Exemplar> all() const;
    std::vector<int> bin_counts(int class_id) const;

    void insert_class(int class_id, std::vector<Exemplar> exemplars);

    // Removes down to new_count, always taking from the currently largest
    // bin (ties to the lowest bin), random within a bin.
    void reduce_class(int class_id, int new_count, std::uint64_t seed);

    // Per-class quota = floor(capacity/num_classes), remainders to the
    // lowest class ids; over-quota classes are reduced.
    void rebalance(int num_classes, std::uint64_t seed);

    void clear() { per_class_.clear(); }

private:
    int capacity_ = 0;
    int bins_ = 8;
    std::map<int, std::vector<Exemplar>> per_class_;
};

}  // namespace incmesh
