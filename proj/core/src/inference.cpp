#include "incmesh/inference.hpp"

#include <algorithm>
#include <cmath>

#include "incmesh/error.hpp"

namespace incmesh {

ScoreField class_scores(const FeatureMap& features, const MeshStore& store,
                        const BackgroundBank& bank) {
    if (store.size() == 0) throw NoClassesError("no meshes stored");

    ScoreField field;
    field.rows = features.rows;
    field.cols = features.cols;
    field.class_ids = store.class_ids();
    const int n_px = field.pixel_count();
    field.class_scores.resize(static_cast<Eigen::Index>(field.class_ids.size()), n_px);

    for (std::size_t c = 0; c < field.class_ids.size(); ++c) {
        const auto& theta = store.get(field.class_ids[c]).theta;
        field.class_scores.row(static_cast<Eigen::Index>(c)) =
            (theta.transpose() * features.data).colwise().maxCoeff();
    }
    field.background = (bank.features.transpose() * features.data).colwise().maxCoeff();

    field.foreground.assign(static_cast<std::size_t>(n_px), 0);
    for (int p = 0; p < n_px; ++p)
        if (field.class_scores.col(p).maxCoeff() > field.background[p])
            field.foreground[static_cast<std::size_t>(p)] = 1;
    return field;
}

ClassifyResult classify(const ScoreField& field) {
    const int n_classes = static_cast<int>(field.class_ids.size());
    const int n_px = field.pixel_count();
    require(n_classes >= 1 && n_px >= 1, "empty score field");

    bool any_fg = false;
    for (const auto f : field.foreground)
        if (f) {
            any_fg = true;
            break;
        }

    Eigen::VectorXd best = Eigen::VectorXd::Constant(n_classes, -std::numeric_limits<double>::infinity());
    for (int p = 0; p < n_px; ++p) {
        if (any_fg && !field.foreground[static_cast<std::size_t>(p)]) continue;
        // Confusion penalty from the two largest class scores at this pixel;
        // with one class the runner-up defaults to the minimum similarity -1.
        double top1 = -std::numeric_limits<double>::infinity();
        double top2 = -1.0;
        for (int c = 0; c < n_classes; ++c) {
            const double s = field.class_scores(c, p);
            if (s > top1) {
                top2 = n_classes > 1 ? top1 : -1.0;
                top1 = s;
            } else if (n_classes > 1 && s > top2) {
                top2 = s;
            }
        }
        if (n_classes > 1 && !std::isfinite(top2)) top2 = top1;  // degenerate single evaluation
        const double penalty = 1.0 - (top1 - top2);
        for (int c = 0; c < n_classes; ++c)
            best[c] = std::max(best[c], field.class_scores(c, p) - penalty);
    }

    ClassifyResult result;
    result.used_fallback = !any_fg;
    int arg = 0;
    for (int c = 1; c < n_classes; ++c)
        if (best[c] > best[arg]) arg = c;  // ties keep the lowest class id
    result.class_id = field.class_ids[static_cast<std::size_t>(arg)];
    result.score = best[arg];
    return result;
}

PoseTemplates build_pose_templates(const NeuralMesh& mesh, const Camera& feature_camera, int count,
                                   double distance) {
    PoseTemplates templates;
    templates.poses = template_pose_grid(count, distance);
    templates.entries.resize(templates.poses.size());
    for (std::size_t i = 0; i < templates.poses.size(); ++i) {
        const RenderResult rr = rasterize(mesh.geometry, templates.poses[i], feature_camera);
        auto& entry = templates.entries[i];
        for (int p = 0; p < rr.width * rr.height; ++p) {
            const auto v = rr.vertex_of_pixel[static_cast<std::size_t>(p)];
            if (v != RenderResult::kBackground) entry.pixel_vertex.emplace_back(p, v);
        }
    }
    return templates;
}

int init_pose_index(const FeatureMap& features, const NeuralMesh& mesh,
                    const PoseTemplates& templates, const std::vector<std::uint8_t>* foreground) {
    require(!templates.poses.empty(), "empty template set");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < templates.entries.size(); ++i) {
        double score = 0.0;
        for (const auto& [pixel, vertex] : templates.entries[i].pixel_vertex) {
            if (foreground && !(*foreground)[static_cast<std::size_t>(pixel)]) continue;
            score += features.data.col(pixel).dot(mesh.theta.col(vertex));
        }
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Pose init_pose(const FeatureMap& features, const NeuralMesh& mesh, const PoseTemplates& templates,
               const std::vector<std::uint8_t>* foreground) {
    return templates.poses[static_cast<std::size_t>(init_pose_index(features, mesh, templates, foreground))];
}

double reconstruction_loss(const FeatureMap& features, const NeuralMesh& mesh, const Pose& pose,
                           const Camera& feature_camera, const std::vector<std::uint8_t>* foreground) {
    const RenderResult rr = rasterize(mesh.geometry, pose, feature_camera);
    double loss = 0.0;
    for (int k = 0; k < mesh.vertex_count(); ++k) {
        if (!rr.visible[static_cast<std::size_t>(k)]) continue;
        const auto& px = rr.pixel_of_vertex[static_cast<std::size_t>(k)];
        const int p = rr.index(px.row, px.col);
        if (foreground && !(*foreground)[static_cast<std::size_t>(p)]) continue;
        loss -= features.data.col(features.index(px.row, px.col)).dot(mesh.theta.col(k));
    }
    return loss;
}

PoseEstimate refine_pose(const FeatureMap& features, const NeuralMesh& mesh, const Pose& init,
                         const Camera& feature_camera, const RefineSettings& settings,
                         const std::vector<std::uint8_t>* foreground) {
    const Pose start = init.canonicalized();
    const auto eval = [&](const Pose& p) -> double {
        try {
            return reconstruction_loss(features, mesh, p, feature_camera, foreground);
        } catch (const EmptyRenderError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    PoseEstimate best;
    best.pose = start;
    best.loss = eval(start);
    if (!std::isfinite(best.loss)) {
        best.failed = true;
        best.loss = 0.0;
        return best;
    }

    Eigen::Vector3d angles(start.azimuth, start.elevation, start.roll);
    Eigen::Vector3d m = Eigen::Vector3d::Zero(), v = Eigen::Vector3d::Zero();
    const auto pose_at = [&](const Eigen::Vector3d& a) {
        Pose p = start;
        p.azimuth = a[0];
        p.elevation = std::clamp(a[1], -0.5 * kPi, 0.5 * kPi);
        p.roll = a[2];
        return p.canonicalized();
    };

    for (int it = 1; it <= settings.iterations; ++it) {
        Eigen::Vector3d grad;
        for (int a = 0; a < 3; ++a) {
            Eigen::Vector3d hi = angles, lo = angles;
            hi[a] += settings.fd_step;
            lo[a] -= settings.fd_step;
            const double f_hi = eval(pose_at(hi));
            const double f_lo = eval(pose_at(lo));
            if (!std::isfinite(f_hi) || !std::isfinite(f_lo)) {
                grad[a] = 0.0;
                continue;
            }
            grad[a] = (f_hi - f_lo) / (2.0 * settings.fd_step);
        }

        m = settings.beta1 * m + (1.0 - settings.beta1) * grad;
        v = settings.beta2 * v + (1.0 - settings.beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(settings.beta1, it);
        const double bc2 = 1.0 - std::pow(settings.beta2, it);
        const Eigen::Vector3d step =
            (m / bc1).array() / ((v / bc2).array().sqrt() + settings.eps);
        angles -= settings.lr * step;
        angles[1] = std::clamp(angles[1], -0.5 * kPi, 0.5 * kPi);

        const Pose candidate = pose_at(angles);
        const double loss = eval(candidate);
        best.iterations = it;
        if (std::isfinite(loss) && loss < best.loss) {
            best.loss = loss;
            best.pose = candidate;
        }
    }
    return best;
}

double pose_accuracy(const std::vector<Mat3>& predicted, const std::vector<Mat3>& ground_truth,
                     double threshold) {
    require(predicted.size() == ground_truth.size(), "pose list length mismatch");
    require(!predicted.empty(), "empty pose lists");
    int hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (rotation_error(predicted[i], ground_truth[i]) < threshold) hits += 1;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double mean_task_accuracy(const std::vector<double>& per_task) {
    require(!per_task.empty(), "no task accuracies");
    double sum = 0.0;
    for (const double a : per_task) sum += a;
    return sum / static_cast<double>(per_task.size());
}

}  // namespace incmesh
