#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "incmesh/bank.hpp"
#include "incmesh/featurenet.hpp"
#include "incmesh/geometry.hpp"
#include "incmesh/latent.hpp"
#include "incmesh/mesh_model.hpp"
#include "incmesh/replay.hpp"

namespace incmesh {

struct TrainConfig {
    // Concentrations and loss weights.
    double kappa1 = 1.0 / 0.07;
    double kappa2 = 1.0;
    double kappa3 = 0.5;
    double lambda_etf = 0.2;
    double lambda_kd = 2.0;
    bool use_replay = true;
    bool use_kd = true;
    bool use_etf = true;
    bool momentum_on_replay = true;

    // Updates and schedule.
    double eta = 0.9;
    int epochs_per_task = 10;
    double lr = 2e-3;
    int lr_halve_epoch = 10;  // per-task epoch at which lr halves once
    double weight_decay = 1e-4;
    int batch_size = 16;

    // Model shape.
    int feature_dim = 32;
    int max_classes = 16;
    int target_vertices = 150;
    double neighbor_radius_frac = 0.2;  // fraction of the cuboid diagonal
    int population_size = 0;            // 0 -> 16 * target_vertices * max_classes, capped at 2^20
    int bank_capacity = 256;
    int bank_update_count = 5;
    int unused_pool_sample = 512;

    // Replay buffer.
    int replay_capacity = 160;
    int azimuth_bins = 8;

    // Imaging.
    int image_size = 64;
    double viewport = 200.0;
    double focal = 1.0;
    double distance = 5.0;

    int effective_population() const;
    // Throws on invalid values; returns advisory warnings (e.g. kappa3 >= 1).
    std::vector<std::string> validate() const;
};

// One mesh vertex paired with the extracted feature at its projected pixel.
struct Correspondence {
    int vertex = -1;
    bool visible = false;
    int row = -1;
    int col = -1;
    Eigen::VectorXd feature;
};

// One entry per mesh vertex; invisible vertices carry no feature and
// contribute to no loss.
std::vector<Correspondence> gather_correspondences(const FeatureMap& features,
                                                   const RenderResult& render);

// Loss value summed over visible vertices plus the gradient w.r.t. each
// correspondence feature (zero columns for invisible vertices).
struct LossResult {
    double value = 0.0;
    Eigen::MatrixXd dfeature;  // dim x correspondences
};

// vMF contrastive loss: softmax over the vertex's own feature against its
// non-neighbor mesh features, all other classes, the background bank, and a
// sample of the unused latent pool.
LossResult loss_cont(const std::vector<Correspondence>& corrs, const MeshStore& store, int class_id,
                     const BackgroundBank& bank, const Eigen::MatrixXd& unused_pool, double kappa1);

// Centroid regularizer: softmax over all class centroids, positive e_c.
LossResult loss_etf(const std::vector<Correspondence>& corrs, const Eigen::MatrixXd& centroids,
                    int class_id, double kappa2);

// Distillation: KL(p(old feature) || p(new feature)) over the previous
// tasks' vertex features. Zero when prev_theta is empty (first task).
LossResult loss_kd(const std::vector<Correspondence>& corrs_new,
                   const std::vector<Correspondence>& corrs_old, const Eigen::MatrixXd& prev_theta,
                   double kappa3);

struct LossTerms {
    double cont = 0.0;
    double etf = 0.0;
    double kd = 0.0;
    double total = 0.0;
};

struct TaskMetrics {
    int task_index = 0;
    std::vector<int> class_ids;
    double test_accuracy = 0.0;
    double final_epoch_mean_loss = 0.0;
};

struct TrainState {
    FeatureExtractor extractor;
    AdamState adam;
    LatentPartition partition;
    MeshStore store;
    BackgroundBank bank;
    ReplayBuffer buffer;
    std::optional<FrozenExtractor> snapshot;
    Eigen::MatrixXd kd_targets;  // previous tasks' vertex features, fixed per task
    Camera camera;               // full-resolution camera
    int tasks_trained = 0;
    std::int64_t global_step = 0;
    std::uint64_t seed = 0;
    std::vector<TaskMetrics> history;

    Camera feature_camera() const { return camera.at_stride(extractor.arch().total_stride()); }
};

TrainState make_train_state(const TrainConfig& config, std::uint64_t seed);

// Per-sample objective: losses are averaged per visible vertex, then the
// weighted sum is backpropagated through the extractor.
struct SampleLossResult {
    LossTerms terms;
    int visible_count = 0;
    Eigen::VectorXd param_grad;
    std::vector<Correspondence> correspondences;
    RenderResult render;
    FeatureMap features;
};

SampleLossResult combined_loss(const Image& image, int class_id, const Pose& pose,
                               const TrainState& state, const TrainConfig& config,
                               const Eigen::MatrixXd& pool_sample);

struct TrainSample {
    std::int64_t id = -1;
    int class_id = -1;
    Pose pose;
};

struct TaskData {
    std::vector<int> class_ids;
    std::vector<TrainSample> samples;
    std::map<int, Vec3> class_dims;
};

using ImageLookup = std::function<const Image*(std::int64_t sample_id)>;

struct StepTrace {
    std::int64_t step = 0;
    int epoch = 0;
    int task = 0;
    double l_cont = 0.0;
    double l_etf = 0.0;
    double l_kd = 0.0;
    double total = 0.0;
};

std::string format_trace(const StepTrace& t);

// Allocates meshes for the task's classes, snapshots the extractor for
// distillation (after the first task), runs the epoch loop with replay mixed
// in, then selects exemplars, rebalances the buffer, and rebalances the
// background bank.
std::vector<StepTrace> train_task(const TaskData& task, TrainState& state, const TrainConfig& config,
                                  const ImageLookup& images);

// Refills the bank evenly across exemplar classes from off-object pixels.
void bg_balance(TrainState& state, const TrainConfig& config, const ImageLookup& images,
                std::uint64_t seed);

}  // namespace incmesh
