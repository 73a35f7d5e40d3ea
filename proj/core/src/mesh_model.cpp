#include "incmesh/mesh_model.hpp"

#include "incmesh/error.hpp"
#include "incmesh/training.hpp"

namespace incmesh {

void MeshStore::add(NeuralMesh mesh) {
    if (meshes_.count(mesh.class_id) > 0)
        throw AlreadyAllocatedError("mesh store already holds class " + std::to_string(mesh.class_id));
    meshes_.emplace(mesh.class_id, std::move(mesh));
}

const NeuralMesh& MeshStore::get(int class_id) const {
    const auto it = meshes_.find(class_id);
    if (it == meshes_.end()) throw NotFoundError("no mesh for class " + std::to_string(class_id));
    return it->second;
}

NeuralMesh& MeshStore::get_mutable(int class_id) {
    const auto it = meshes_.find(class_id);
    if (it == meshes_.end()) throw NotFoundError("no mesh for class " + std::to_string(class_id));
    return it->second;
}

std::vector<int> MeshStore::class_ids() const {
    std::vector<int> ids;
    ids.reserve(meshes_.size());
    for (const auto& [id, mesh] : meshes_) ids.push_back(id);
    return ids;
}

Eigen::MatrixXd MeshStore::concat_theta() const {
    Eigen::Index dim = 0, total = 0;
    for (const auto& [id, mesh] : meshes_) {
        dim = mesh.theta.rows();
        total += mesh.theta.cols();
    }
    Eigen::MatrixXd all(dim, total);
    Eigen::Index off = 0;
    for (const auto& [id, mesh] : meshes_) {
        all.middleCols(off, mesh.theta.cols()) = mesh.theta;
        off += mesh.theta.cols();
    }
    return all;
}

void momentum_update(NeuralMesh& mesh, const std::vector<Correspondence>& correspondences,
                     double eta) {
    require(eta >= 0.0 && eta <= 1.0, "momentum eta must be in [0,1]");
    for (const auto& corr : correspondences) {
        if (!corr.visible) continue;
        Eigen::VectorXd blended = (1.0 - eta) * corr.feature + eta * mesh.theta.col(corr.vertex);
        const double n = blended.norm();
        if (n < 1e-12) continue;  // exactly opposing update; keep the old feature
        mesh.theta.col(corr.vertex) = blended / n;
    }
}

}  // namespace incmesh
