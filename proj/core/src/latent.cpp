#include "incmesh/latent.hpp"

#include <istream>
#include <ostream>

#include "incmesh/error.hpp"
#include "incmesh/serial.hpp"

namespace incmesh {

Eigen::MatrixXd etf_from_basis(const Eigen::MatrixXd& u, int n) {
    require(n >= 2, "ETF needs at least 2 classes");
    require(u.cols() == n, "basis column count must equal class count");
    require(u.rows() >= n, "feature dimension must be >= class count");
    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    return std::sqrt(static_cast<double>(n) / (n - 1)) * u * centering;
}

Eigen::MatrixXd build_etf(int max_classes, int dim, std::uint64_t seed) {
    require(max_classes >= 2, "ETF needs at least 2 classes");
    if (dim < max_classes) throw InvalidArgument("ETF requires dim >= max_classes");

    Rng rng(seed_combine(seed, 0x45544643ULL));
    Eigen::MatrixXd g(dim, max_classes);
    for (int c = 0; c < max_classes; ++c)
        for (int r = 0; r < dim; ++r) g(r, c) = rng.normal();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, max_classes);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(max_classes).triangularView<Eigen::Upper>();
    // Fix column signs so the factorization (and thus the frame) is unique.
    for (int c = 0; c < max_classes; ++c)
        if (r(c, c) < 0.0) q.col(c) = -q.col(c);
    return etf_from_basis(q, max_classes);
}

Eigen::MatrixXd sample_population(int count, int dim, std::uint64_t seed) {
    require(count >= 1, "population count must be >= 1");
    require(dim >= 1, "population dim must be >= 1");
    Rng rng(seed_combine(seed, 0x504f5055ULL));
    Eigen::MatrixXd h(dim, count);
    for (int c = 0; c < count; ++c) {
        double norm2 = 0.0;
        do {
            for (int r = 0; r < dim; ++r) h(r, c) = rng.normal();
            norm2 = h.col(c).squaredNorm();
        } while (norm2 < 1e-24);
        h.col(c) /= std::sqrt(norm2);
    }
    return h;
}

std::vector<std::int32_t> assign_to_centroids(const Eigen::MatrixXd& population,
                                              const Eigen::MatrixXd& centroids) {
    require(population.rows() == centroids.rows(), "population/centroid dims must match");
    const Eigen::MatrixXd scores = centroids.transpose() * population;  // N x M
    std::vector<std::int32_t> assignment(static_cast<std::size_t>(population.cols()));
    for (int m = 0; m < population.cols(); ++m) {
        int best = 0;
        double best_score = scores(0, m);
        for (int c = 1; c < centroids.cols(); ++c) {
            if (scores(c, m) > best_score) {  // strict: ties keep the lowest index
                best_score = scores(c, m);
                best = c;
            }
        }
        assignment[static_cast<std::size_t>(m)] = best;
    }
    return assignment;
}

LatentPartition make_latent_partition(int max_classes, int dim, int population_size,
                                      std::uint64_t seed) {
    LatentPartition part;
    part.dim = dim;
    part.max_classes = max_classes;
    part.centroids = build_etf(max_classes, dim, seed);
    part.population = sample_population(population_size, dim, seed);
    part.assignment = assign_to_centroids(part.population, part.centroids);
    return part;
}

Eigen::MatrixXd allocate_class(LatentPartition& partition, int class_id, int vertex_count,
                               std::uint64_t seed) {
    require(class_id >= 0 && class_id < partition.max_classes, "class_id out of range");
    require(vertex_count >= 0, "vertex_count must be >= 0");
    if (partition.is_used(class_id))
        throw AlreadyAllocatedError("latent partition already allocated for class " +
                                    std::to_string(class_id));

    std::vector<int> members;
    for (std::size_t m = 0; m < partition.assignment.size(); ++m)
        if (partition.assignment[m] == class_id) members.push_back(static_cast<int>(m));
    if (members.empty() && vertex_count > 0)
        throw Error("latent partition empty for class " + std::to_string(class_id));

    Rng rng(seed_combine(seed, 0x414c4c4fULL + static_cast<std::uint64_t>(class_id)));
    Eigen::MatrixXd theta(partition.dim, vertex_count);
    const int n = static_cast<int>(members.size());
    if (vertex_count <= n) {
        const auto pick = rng.sample_without_replacement(n, vertex_count);
        for (int i = 0; i < vertex_count; ++i)
            theta.col(i) = partition.population.col(members[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]);
    } else {
        for (int i = 0; i < vertex_count; ++i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
            theta.col(i) = partition.population.col(members[j]);
        }
    }
    partition.used_classes.insert(class_id);
    return theta;
}

Eigen::MatrixXd sample_unused_pool(const LatentPartition& partition, int count, Rng& rng) {
    std::vector<int> unused;
    for (std::size_t m = 0; m < partition.assignment.size(); ++m)
        if (!partition.is_used(partition.assignment[m])) unused.push_back(static_cast<int>(m));
    const int take = std::min<int>(count, static_cast<int>(unused.size()));
    Eigen::MatrixXd out(partition.dim, take);
    if (take == 0) return out;
    const auto pick = rng.sample_without_replacement(static_cast<int>(unused.size()), take);
    for (int i = 0; i < take; ++i)
        out.col(i) = partition.population.col(unused[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]);
    return out;
}

void save_latent(std::ostream& out, const LatentPartition& partition) {
    serial::write_i32(out, partition.dim);
    serial::write_i32(out, partition.max_classes);
    serial::write_matrix(out, partition.centroids);
    serial::write_matrix(out, partition.population);
    serial::write_i32_vec(out, partition.assignment);
    std::vector<std::int32_t> used(partition.used_classes.begin(), partition.used_classes.end());
    serial::write_i32_vec(out, used);
}

LatentPartition load_latent(std::istream& in) {
    LatentPartition p;
    p.dim = serial::read_i32(in);
    p.max_classes = serial::read_i32(in);
    p.centroids = serial::read_matrix(in);
    p.population = serial::read_matrix(in);
    p.assignment = serial::read_i32_vec(in);
    for (const auto c : serial::read_i32_vec(in)) p.used_classes.insert(c);
    return p;
}

}  // namespace incmesh
