#pragma once
#include <Eigen/Dense>
#include <map>
#include <vector>

#include "incmesh/geometry.hpp"

namespace incmesh {

struct Correspondence;  // training.hpp

// Per-class generative model: cuboid geometry plus unit-norm vertex features.
struct NeuralMesh {
    int class_id = -1;
    CuboidMesh geometry;
    Eigen::MatrixXd theta;  // dim x K, unit columns
    std::vector<std::vector<int>> neighborhoods;

    int vertex_count() const { return static_cast<int>(theta.cols()); }
    int feature_dim() const { return static_cast<int>(theta.rows()); }
};

// Growing set of neural meshes, one per trained class.
class MeshStore {
public:
    void add(NeuralMesh mesh);
    const NeuralMesh& get(int class_id) const;
    NeuralMesh& get_mutable(int class_id);
    bool has(int class_id) const { return meshes_.count(class_id) > 0; }
    int size() const { return static_cast<int>(meshes_.size()); }
    std::vector<int> class_ids() const;

    auto begin() const { return meshes_.begin(); }
    auto end() const { return meshes_.end(); }

    // All vertex features side by side, ordered by class id; the column
    // ranges per class follow class_ids() order.
    Eigen::MatrixXd concat_theta() const;

private:
    std::map<int, NeuralMesh> meshes_;
};

// theta <- (1-eta) f + eta theta for visible vertices, then renormalized;
// invisible vertices are left bit-unchanged.
void momentum_update(NeuralMesh& mesh, const std::vector<Correspondence>& correspondences,
                     double eta);

}  // namespace incmesh
