#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <vector>

#include "incmesh/rng.hpp"

namespace incmesh {

// Simplex equiangular tight frame from an orthonormal basis U (d x n):
// E = sqrt(n/(n-1)) * U * (I - (1/n) 1 1^T). Columns are unit vectors with
// pairwise inner products -1/(n-1).
Eigen::MatrixXd etf_from_basis(const Eigen::MatrixXd& u, int n);

// ETF centroids with U orthonormalized from a seeded Gaussian draw.
Eigen::MatrixXd build_etf(int max_classes, int dim, std::uint64_t seed);

// count unit vectors drawn uniformly on the sphere (columns).
Eigen::MatrixXd sample_population(int count, int dim, std::uint64_t seed);

// Nearest centroid by inner product; ties go to the lowest class index.
std::vector<std::int32_t> assign_to_centroids(const Eigen::MatrixXd& population,
                                              const Eigen::MatrixXd& centroids);

// Pre-partitioned feature sphere: centroids for up to max_classes classes and
// a population split among them. Classes consume their partition when a mesh
// is allocated; everything still assigned to an unused class forms the
// unused pool.
struct LatentPartition {
    int dim = 0;
    int max_classes = 0;
    Eigen::MatrixXd centroids;            // dim x max_classes
    Eigen::MatrixXd population;           // dim x M
    std::vector<std::int32_t> assignment; // M, class index per column
    std::set<std::int32_t> used_classes;

    bool is_used(int class_id) const { return used_classes.count(class_id) > 0; }
};

LatentPartition make_latent_partition(int max_classes, int dim, int population_size,
                                      std::uint64_t seed);

// vertex_count features drawn from the class partition (without replacement
// when it is large enough, otherwise with replacement); marks the class used.
Eigen::MatrixXd allocate_class(LatentPartition& partition, int class_id, int vertex_count,
                               std::uint64_t seed);

// Up to count vectors sampled without replacement from the unused pool.
Eigen::MatrixXd sample_unused_pool(const LatentPartition& partition, int count, Rng& rng);

void save_latent(std::ostream& out, const LatentPartition& partition);
LatentPartition load_latent(std::istream& in);

}  // namespace incmesh
