#include "incmesh/bank.hpp"

#include <algorithm>
#include <numeric>

#include "incmesh/error.hpp"
#include "incmesh/latent.hpp"

namespace incmesh {

BackgroundBank BackgroundBank::make(int dim, int capacity, std::uint64_t seed) {
    require(dim >= 1 && capacity >= 1, "bank dims must be positive");
    BackgroundBank bank;
    bank.features = sample_population(capacity, dim, seed_combine(seed, 0x42414e4bULL));
    bank.ages.assign(static_cast<std::size_t>(capacity), 0);
    return bank;
}

BankUpdateResult bg_update(BackgroundBank& bank, const FeatureMap& features,
                           const RenderResult& render, int n_new, Rng& rng) {
    require(n_new >= 0, "n_new must be >= 0");
    require(n_new <= bank.capacity(), "n_new exceeds bank capacity");
    require(features.rows == render.height && features.cols == render.width,
            "feature map and render resolution mismatch");

    std::vector<int> candidates;
    const int n_px = features.rows * features.cols;
    for (int p = 0; p < n_px; ++p)
        if (render.object_mask[static_cast<std::size_t>(p)] == 0 &&
            render.vertex_of_pixel[static_cast<std::size_t>(p)] == RenderResult::kBackground)
            candidates.push_back(p);
    if (candidates.empty() || n_new == 0) return {false};

    // Oldest first; ties broken by slot index so eviction is deterministic.
    std::vector<int> order(static_cast<std::size_t>(bank.capacity()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return bank.ages[static_cast<std::size_t>(a)] > bank.ages[static_cast<std::size_t>(b)];
    });

    std::vector<int> slots(order.begin(), order.begin() + n_new);
    for (auto& age : bank.ages) age += 1;
    for (const int slot : slots) {
        const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1));
        bank.features.col(slot) = features.data.col(candidates[pick]);
        bank.ages[static_cast<std::size_t>(slot)] = 0;
    }
    return {true};
}

}  // namespace incmesh
