#pragma once
#include <cstdint>
#include <string>

#include "incmesh/training.hpp"

namespace incmesh {

// Full experiment description: training hyperparameters plus run-level
// settings. Serializes to flat key=value text (the same format the config
// file uses); unknown keys are rejected.
struct ExperimentConfig {
    TrainConfig train;

    std::string dataset_dir;
    std::string checkpoint_dir;
    std::string split_spec;  // empty -> the dataset's own split
    std::uint64_t seed = 1;
    std::string eval_occlusion = "all";  // none | l1 | l2 | l3 | all
    int template_count = 144;
    double pose_threshold_loose = kPi / 6.0;
    double pose_threshold_tight = kPi / 18.0;
    std::string lambda_preset = "main";  // main | supplementary

    static ExperimentConfig from_file(const std::string& path);

    // Applies "key=value"; "preset" switches both loss weights at once.
    void set_key(const std::string& key, const std::string& value);
    void apply_override(const std::string& key_eq_value);

    std::string to_key_value_text() const;
};

}  // namespace incmesh
