#include "incmesh/replay.hpp"

#include <algorithm>

#include "incmesh/error.hpp"
#include "incmesh/rng.hpp"

namespace incmesh {

int azimuth_bin_of(double azimuth, int bins) {
    require(bins >= 1, "bin count must be >= 1");
    const double two_pi = 2.0 * kPi;
    double a = std::fmod(azimuth, two_pi);
    if (a < 0.0) a += two_pi;
    const int b = static_cast<int>(a / two_pi * bins);
    return std::min(b, bins - 1);
}

SelectionResult select_exemplars(const std::vector<Exemplar>& candidates, int slots, int bins,
                                 std::uint64_t seed) {
    require(slots >= 1, "slots must be >= 1");
    require(bins >= 1, "bins must be >= 1");

    SelectionResult result;
    if (static_cast<int>(candidates.size()) <= slots) {
        result.exemplars = candidates;
        for (auto& e : result.exemplars) e.azimuth_bin = azimuth_bin_of(e.pose.azimuth, bins);
        result.exhausted = static_cast<int>(candidates.size()) < slots;
        return result;
    }

    std::vector<std::vector<int>> binned(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        binned[static_cast<std::size_t>(azimuth_bin_of(candidates[i].pose.azimuth, bins))].push_back(
            static_cast<int>(i));

    // Merge underfull bins rightward (wrapping) before drawing.
    const int quota = slots / bins;
    std::vector<bool> active(static_cast<std::size_t>(bins), true);
    if (bins > 1) {
        for (int b = 0; b < bins; ++b) {
            if (static_cast<int>(binned[static_cast<std::size_t>(b)].size()) >= quota) continue;
            int right = (b + 1) % bins;
            while (right != b && !active[static_cast<std::size_t>(right)]) right = (right + 1) % bins;
            if (right == b) break;  // single active bin left
            auto& dst = binned[static_cast<std::size_t>(right)];
            auto& src = binned[static_cast<std::size_t>(b)];
            dst.insert(dst.end(), src.begin(), src.end());
            src.clear();
            active[static_cast<std::size_t>(b)] = false;
        }
    }

    Rng rng(seed_combine(seed, 0x53454c45ULL));
    std::vector<bool> taken(candidates.size(), false);
    std::vector<int> chosen;
    for (int b = 0; b < bins; ++b) {
        if (!active[static_cast<std::size_t>(b)]) continue;
        auto& members = binned[static_cast<std::size_t>(b)];
        const int take = std::min<int>(quota, static_cast<int>(members.size()));
        const auto pick = rng.sample_without_replacement(static_cast<int>(members.size()), take);
        for (const int j : pick) {
            chosen.push_back(members[static_cast<std::size_t>(j)]);
            taken[static_cast<std::size_t>(members[static_cast<std::size_t>(j)])] = true;
        }
    }

    // Top up from the unselected remainder.
    if (static_cast<int>(chosen.size()) < slots) {
        std::vector<int> rest;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (!taken[i]) rest.push_back(static_cast<int>(i));
        const int need = slots - static_cast<int>(chosen.size());
        const auto pick = rng.sample_without_replacement(static_cast<int>(rest.size()), need);
        for (const int j : pick) chosen.push_back(rest[static_cast<std::size_t>(j)]);
    }

    std::sort(chosen.begin(), chosen.end());
    for (const int i : chosen) {
        Exemplar e = candidates[static_cast<std::size_t>(i)];
        e.azimuth_bin = azimuth_bin_of(e.pose.azimuth, bins);
        result.exemplars.push_back(e);
    }
    return result;
}

int ReplayBuffer::total() const {
    int n = 0;
    for (const auto& [id, v] : per_class_) n += static_cast<int>(v.size());
    return n;
}

std::vector<int> ReplayBuffer::class_ids() const {
    std::vector<int> ids;
    ids.reserve(per_class_.size());
    for (const auto& [id, v] : per_class_) ids.push_back(id);
    return ids;
}

const std::vector<Exemplar>& ReplayBuffer::exemplars_of(int class_id) const {
    const auto it = per_class_.find(class_id);
    if (it == per_class_.end()) throw NotFoundError("no exemplars for class " + std::to_string(class_id));
    return it->second;
}

std::vector<Exemplar> ReplayBuffer::all() const {
    std::vector<Exemplar> out;
    for (const auto& [id, v] : per_class_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<int> ReplayBuffer::bin_counts(int class_id) const {
    std::vector<int> counts(static_cast<std::size_t>(bins_), 0);
    for (const auto& e : exemplars_of(class_id)) counts[static_cast<std::size_t>(e.azimuth_bin)] += 1;
    return counts;
}

void ReplayBuffer::insert_class(int class_id, std::vector<Exemplar> exemplars) {
    if (per_class_.count(class_id) > 0)
        throw AlreadyAllocatedError("replay buffer already holds class " + std::to_string(class_id));
    for (auto& e : exemplars) {
        e.class_id = class_id;
        e.azimuth_bin = azimuth_bin_of(e.pose.azimuth, bins_);
    }
    per_class_[class_id] = std::move(exemplars);
}

void ReplayBuffer::reduce_class(int class_id, int new_count, std::uint64_t seed) {
    require(new_count >= 0, "new_count must be >= 0");
    auto it = per_class_.find(class_id);
    if (it == per_class_.end()) throw NotFoundError("no exemplars for class " + std::to_string(class_id));
    auto& exemplars = it->second;
    require(new_count <= static_cast<int>(exemplars.size()), "cannot reduce upward");

    Rng rng(seed_combine(seed, 0x52454455ULL + static_cast<std::uint64_t>(class_id)));
    while (static_cast<int>(exemplars.size()) > new_count) {
        std::vector<int> counts(static_cast<std::size_t>(bins_), 0);
        for (const auto& e : exemplars) counts[static_cast<std::size_t>(e.azimuth_bin)] += 1;
        const int largest =
            static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        std::vector<int> members;
        for (std::size_t i = 0; i < exemplars.size(); ++i)
            if (exemplars[i].azimuth_bin == largest) members.push_back(static_cast<int>(i));
        const auto victim =
            members[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1))];
        exemplars.erase(exemplars.begin() + victim);
    }
    if (exemplars.empty()) per_class_.erase(it);
}

void ReplayBuffer::rebalance(int num_classes, std::uint64_t seed) {
    require(num_classes >= 1, "num_classes must be >= 1");
    const int quota = capacity_ / num_classes;
    const int remainder = capacity_ % num_classes;
    const auto ids = class_ids();
    for (std::size_t rank = 0; rank < ids.size(); ++rank) {
        const int allowed = quota + (static_cast<int>(rank) < remainder ? 1 : 0);
        const int current = static_cast<int>(per_class_.at(ids[rank]).size());
        if (current > allowed) reduce_class(ids[rank], allowed, seed_combine(seed, rank));
    }
}

}  // namespace incmesh
