#pragma once
#include <filesystem>
#include <string>

#include "incmesh/training.hpp"

namespace incmesh {

// Binary model checkpoint: extractor (self-describing architecture +
// parameters), mesh store, background bank, latent partition, replay
// manifest, config echo, and per-task metric history. Doubles are stored
// bit-exactly, so save -> load -> save round-trips byte-identically.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const std::string& config_echo);

struct LoadedCheckpoint {
    TrainState state;
    std::string config_echo;
};

// Throws CheckpointMismatchError on a version or magic mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace incmesh
