#pragma once
#include <Eigen/Dense>
#include <vector>

#include "incmesh/bank.hpp"
#include "incmesh/featurenet.hpp"
#include "incmesh/geometry.hpp"
#include "incmesh/mesh_model.hpp"

namespace incmesh {

// Per-pixel best-vertex similarity per class, best background similarity,
// and the derived foreground set.
struct ScoreField {
    int rows = 0;
    int cols = 0;
    std::vector<int> class_ids;      // row order of class_scores
    Eigen::MatrixXd class_scores;    // classes x pixels
    Eigen::VectorXd background;      // pixels
    std::vector<std::uint8_t> foreground;

    int pixel_count() const { return rows * cols; }
};

ScoreField class_scores(const FeatureMap& features, const MeshStore& store,
                        const BackgroundBank& bank);

struct ClassifyResult {
    int class_id = -1;
    double score = 0.0;
    bool used_fallback = false;  // empty foreground, scored over all pixels
};

// Confusion-adjusted vertex matching: per pixel the class score is penalized
// by 1 - (top1 - top2); the class maximum over the foreground wins. With a
// single stored class the second-best score is defined as -1.
ClassifyResult classify(const ScoreField& field);

// Pre-rendered viewing-angle grid for one mesh: per pose, the visible
// (pixel, vertex) pairs at the feature-map resolution.
struct PoseTemplates {
    std::vector<Pose> poses;
    struct Entry {
        std::vector<std::pair<int, int>> pixel_vertex;
    };
    std::vector<Entry> entries;
};

PoseTemplates build_pose_templates(const NeuralMesh& mesh, const Camera& feature_camera, int count,
                                   double distance);

// Grid pose maximizing the summed feature/vertex similarity over covered
// pixels (intersected with the foreground mask when given).
int init_pose_index(const FeatureMap& features, const NeuralMesh& mesh,
                    const PoseTemplates& templates, const std::vector<std::uint8_t>* foreground = nullptr);
Pose init_pose(const FeatureMap& features, const NeuralMesh& mesh, const PoseTemplates& templates,
               const std::vector<std::uint8_t>* foreground = nullptr);

// Reconstruction loss: sum of -f.theta over visible vertices whose pixels
// fall inside the image (and the foreground mask, when given).
double reconstruction_loss(const FeatureMap& features, const NeuralMesh& mesh, const Pose& pose,
                           const Camera& feature_camera,
                           const std::vector<std::uint8_t>* foreground = nullptr);

struct RefineSettings {
    double lr = 0.05;
    double beta1 = 0.4;
    double beta2 = 0.6;
    double eps = 1e-8;
    int iterations = 30;
    double fd_step = 0.04;  // central-difference step over the three angles
};

struct PoseEstimate {
    Pose pose;
    double loss = 0.0;
    int iterations = 0;
    int init_template = -1;
    bool failed = false;
};

// Adaptive-moment descent over (azimuth, elevation, roll) with gradients by
// central finite differences on re-rendered correspondences; returns the
// best-loss iterate, so the result never scores worse than the init.
PoseEstimate refine_pose(const FeatureMap& features, const NeuralMesh& mesh, const Pose& init,
                         const Camera& feature_camera, const RefineSettings& settings = {},
                         const std::vector<std::uint8_t>* foreground = nullptr);

// Fraction of estimates with rotation_error strictly below the threshold.
double pose_accuracy(const std::vector<Mat3>& predicted, const std::vector<Mat3>& ground_truth,
                     double threshold);

double mean_task_accuracy(const std::vector<double>& per_task);

}  // namespace incmesh
