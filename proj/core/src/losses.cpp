#include <cmath>

#include "incmesh/error.hpp"
#include "incmesh/training.hpp"

namespace incmesh {

namespace {

// Stable log-sum-exp; returns the shift-adjusted log of the partition sum.
double logsumexp(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    return m + std::log((logits.array() - m).exp().sum());
}

}  // namespace

std::vector<Correspondence> gather_correspondences(const FeatureMap& features,
                                                   const RenderResult& render) {
    if (features.rows != render.height || features.cols != render.width)
        throw InvalidArgument("feature map and render resolution mismatch");
    std::vector<Correspondence> corrs(static_cast<std::size_t>(render.pixel_of_vertex.size()));
    for (std::size_t k = 0; k < corrs.size(); ++k) {
        auto& c = corrs[k];
        c.vertex = static_cast<int>(k);
        if (!render.visible[k]) continue;
        const auto& px = render.pixel_of_vertex[k];
        c.visible = true;
        c.row = px.row;
        c.col = px.col;
        c.feature = features.data.col(features.index(px.row, px.col));
    }
    return corrs;
}

LossResult loss_cont(const std::vector<Correspondence>& corrs, const MeshStore& store, int class_id,
                     const BackgroundBank& bank, const Eigen::MatrixXd& unused_pool, double kappa1) {
    const NeuralMesh& mesh = store.get(class_id);
    const int k_own = mesh.vertex_count();
    const Eigen::Index dim = mesh.theta.rows();

    // Fixed candidate block: other classes' vertex features, the bank, and
    // the unused-pool sample. The own-class block is masked per vertex.
    Eigen::Index n_fixed = bank.features.cols() + unused_pool.cols();
    for (const int other : store.class_ids())
        if (other != class_id) n_fixed += store.get(other).theta.cols();
    Eigen::MatrixXd fixed(dim, n_fixed);
    Eigen::Index off = 0;
    for (const int other : store.class_ids()) {
        if (other == class_id) continue;
        const auto& t = store.get(other).theta;
        fixed.middleCols(off, t.cols()) = t;
        off += t.cols();
    }
    fixed.middleCols(off, bank.features.cols()) = bank.features;
    off += bank.features.cols();
    if (unused_pool.cols() > 0) fixed.middleCols(off, unused_pool.cols()) = unused_pool;

    LossResult result;
    result.dfeature = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(corrs.size()));

    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const auto& corr = corrs[i];
        if (!corr.visible) continue;
        const int k = corr.vertex;
        const Eigen::VectorXd own_scores = kappa1 * (mesh.theta.transpose() * corr.feature);
        const Eigen::VectorXd fixed_scores =
            n_fixed > 0 ? (kappa1 * (fixed.transpose() * corr.feature)).eval() : Eigen::VectorXd();

        // Own-class candidates exclude the spatial neighborhood but keep the
        // positive itself.
        std::vector<char> keep(static_cast<std::size_t>(k_own), 1);
        for (const int nb : mesh.neighborhoods[static_cast<std::size_t>(k)])
            keep[static_cast<std::size_t>(nb)] = 0;
        keep[static_cast<std::size_t>(k)] = 1;

        Eigen::VectorXd logits(k_own + n_fixed);
        std::vector<int> own_cols;
        own_cols.reserve(static_cast<std::size_t>(k_own));
        Eigen::Index n = 0;
        for (int j = 0; j < k_own; ++j) {
            if (!keep[static_cast<std::size_t>(j)]) continue;
            logits[n++] = own_scores[j];
            own_cols.push_back(j);
        }
        const Eigen::Index n_own = n;
        for (Eigen::Index j = 0; j < n_fixed; ++j) logits[n++] = fixed_scores[j];
        logits.conservativeResize(n);

        const double lse = logsumexp(logits);
        result.value += lse - own_scores[k];

        const Eigen::VectorXd p = (logits.array() - lse).exp();
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index j = 0; j < n_own; ++j)
            expected += p[j] * mesh.theta.col(own_cols[static_cast<std::size_t>(j)]);
        if (n_fixed > 0) expected += fixed * p.tail(n_fixed);
        result.dfeature.col(static_cast<Eigen::Index>(i)) =
            kappa1 * (expected - mesh.theta.col(k));
    }
    return result;
}

LossResult loss_etf(const std::vector<Correspondence>& corrs, const Eigen::MatrixXd& centroids,
                    int class_id, double kappa2) {
    require(class_id >= 0 && class_id < centroids.cols(), "class_id outside centroid range");
    LossResult result;
    result.dfeature = Eigen::MatrixXd::Zero(centroids.rows(), static_cast<Eigen::Index>(corrs.size()));
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const auto& corr = corrs[i];
        if (!corr.visible) continue;
        const Eigen::VectorXd logits = kappa2 * (centroids.transpose() * corr.feature);
        const double lse = logsumexp(logits);
        result.value += lse - logits[class_id];
        const Eigen::VectorXd p = (logits.array() - lse).exp();
        result.dfeature.col(static_cast<Eigen::Index>(i)) =
            kappa2 * (centroids * p - centroids.col(class_id));
    }
    return result;
}

LossResult loss_kd(const std::vector<Correspondence>& corrs_new,
                   const std::vector<Correspondence>& corrs_old, const Eigen::MatrixXd& prev_theta,
                   double kappa3) {
    require(corrs_new.size() == corrs_old.size(), "distillation correspondence count mismatch");
    LossResult result;
    const Eigen::Index dim = prev_theta.rows();
    result.dfeature = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(corrs_new.size()));
    if (prev_theta.cols() == 0) return result;  // first task

    for (std::size_t i = 0; i < corrs_new.size(); ++i) {
        const auto& cn = corrs_new[i];
        const auto& co = corrs_old[i];
        if (!cn.visible) continue;
        require(co.visible && co.vertex == cn.vertex, "distillation correspondences misaligned");

        const Eigen::VectorXd z_new = kappa3 * (prev_theta.transpose() * cn.feature);
        const Eigen::VectorXd z_old = kappa3 * (prev_theta.transpose() * co.feature);
        const double lse_new = logsumexp(z_new);
        const double lse_old = logsumexp(z_old);
        const Eigen::VectorXd p_new = (z_new.array() - lse_new).exp();
        const Eigen::VectorXd p_old = (z_old.array() - lse_old).exp();

        // KL(p_old || p_new) >= 0, zero iff the distributions coincide.
        result.value +=
            (p_old.array() * ((z_old.array() - lse_old) - (z_new.array() - lse_new))).sum();
        result.dfeature.col(static_cast<Eigen::Index>(i)) =
            kappa3 * (prev_theta * p_new - prev_theta * p_old);
    }
    return result;
}

}  // namespace incmesh
