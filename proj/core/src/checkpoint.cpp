#include "incmesh/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "incmesh/error.hpp"
#include "incmesh/serial.hpp"
#include "incmesh/version.hpp"

namespace incmesh {

namespace {

constexpr char kMagic[4] = {'I', 'N', 'M', 'C'};

void write_mesh(std::ostream& out, const NeuralMesh& mesh) {
    serial::write_i32(out, mesh.class_id);
    for (int a = 0; a < 3; ++a) serial::write_f64(out, mesh.geometry.dims[a]);
    serial::write_u64(out, mesh.geometry.vertices.size());
    for (const auto& v : mesh.geometry.vertices)
        for (int a = 0; a < 3; ++a) serial::write_f64(out, v[a]);
    serial::write_u64(out, mesh.geometry.faces.size());
    for (const auto& f : mesh.geometry.faces)
        for (const int idx : f) serial::write_i32(out, idx);
    serial::write_matrix(out, mesh.theta);
    serial::write_u64(out, mesh.neighborhoods.size());
    for (const auto& nb : mesh.neighborhoods) {
        std::vector<std::int32_t> v(nb.begin(), nb.end());
        serial::write_i32_vec(out, v);
    }
}

NeuralMesh read_mesh(std::istream& in) {
    NeuralMesh mesh;
    mesh.class_id = serial::read_i32(in);
    for (int a = 0; a < 3; ++a) mesh.geometry.dims[a] = serial::read_f64(in);
    mesh.geometry.vertices.resize(serial::read_u64(in));
    for (auto& v : mesh.geometry.vertices)
        for (int a = 0; a < 3; ++a) v[a] = serial::read_f64(in);
    mesh.geometry.faces.resize(serial::read_u64(in));
    for (auto& f : mesh.geometry.faces)
        for (int& idx : f) idx = serial::read_i32(in);
    mesh.theta = serial::read_matrix(in);
    mesh.neighborhoods.resize(serial::read_u64(in));
    for (auto& nb : mesh.neighborhoods) {
        const auto v = serial::read_i32_vec(in);
        nb.assign(v.begin(), v.end());
    }
    return mesh;
}

void write_pose(std::ostream& out, const Pose& p) {
    serial::write_f64(out, p.azimuth);
    serial::write_f64(out, p.elevation);
    serial::write_f64(out, p.roll);
    serial::write_f64(out, p.distance);
}

Pose read_pose(std::istream& in) {
    Pose p;
    p.azimuth = serial::read_f64(in);
    p.elevation = serial::read_f64(in);
    p.roll = serial::read_f64(in);
    p.distance = serial::read_f64(in);
    return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const std::string& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());

    out.write(kMagic, 4);
    serial::write_u32(out, kCheckpointVersion);
    serial::write_string(out, kCodeVersion);
    serial::write_string(out, config_echo);

    // Extractor (self-describing).
    const auto& arch = state.extractor.arch();
    serial::write_u64(out, arch.layers.size());
    for (const auto& l : arch.layers) {
        serial::write_i32(out, l.in_ch);
        serial::write_i32(out, l.out_ch);
        serial::write_i32(out, l.ksize);
        serial::write_i32(out, l.stride);
    }
    serial::write_vector(out, state.extractor.params());

    save_latent(out, state.partition);

    serial::write_u64(out, static_cast<std::uint64_t>(state.store.size()));
    for (const auto& [id, mesh] : state.store) write_mesh(out, mesh);

    serial::write_matrix(out, state.bank.features);
    serial::write_i64_vec(out, state.bank.ages);

    // Replay manifest.
    serial::write_i32(out, state.buffer.capacity());
    serial::write_i32(out, state.buffer.bins());
    const auto exemplars = state.buffer.all();
    serial::write_u64(out, exemplars.size());
    for (const auto& e : exemplars) {
        serial::write_i64(out, e.sample_id);
        serial::write_i32(out, e.class_id);
        write_pose(out, e.pose);
        serial::write_i32(out, e.azimuth_bin);
    }

    serial::write_f64(out, state.camera.focal);
    serial::write_f64(out, state.camera.viewport);
    serial::write_i32(out, state.camera.width);
    serial::write_i32(out, state.camera.height);
    serial::write_i32(out, state.tasks_trained);
    serial::write_i64(out, state.global_step);
    serial::write_u64(out, state.seed);

    serial::write_u64(out, state.history.size());
    for (const auto& m : state.history) {
        serial::write_i32(out, m.task_index);
        std::vector<std::int32_t> ids(m.class_ids.begin(), m.class_ids.end());
        serial::write_i32_vec(out, ids);
        serial::write_f64(out, m.test_accuracy);
        serial::write_f64(out, m.final_epoch_mean_loss);
    }
    if (!out) throw IoError("short checkpoint write: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointMismatchError("bad checkpoint magic: " + path.string());
    const auto version = serial::read_u32(in);
    if (version != kCheckpointVersion)
        throw CheckpointMismatchError("checkpoint version " + std::to_string(version) +
                                      " != " + std::to_string(kCheckpointVersion));
    serial::read_string(in);  // code version, informational
    std::string config_echo = serial::read_string(in);

    ArchDescriptor arch;
    arch.layers.resize(serial::read_u64(in));
    for (auto& l : arch.layers) {
        l.in_ch = serial::read_i32(in);
        l.out_ch = serial::read_i32(in);
        l.ksize = serial::read_i32(in);
        l.stride = serial::read_i32(in);
    }
    Eigen::VectorXd params = serial::read_vector(in);
    FeatureExtractor extractor(arch, std::move(params));

    LatentPartition partition = load_latent(in);

    MeshStore store;
    const auto n_meshes = serial::read_u64(in);
    for (std::uint64_t i = 0; i < n_meshes; ++i) store.add(read_mesh(in));

    BackgroundBank bank;
    bank.features = serial::read_matrix(in);
    bank.ages = serial::read_i64_vec(in);

    const int capacity = serial::read_i32(in);
    const int bins = serial::read_i32(in);
    ReplayBuffer buffer(capacity, bins);
    const auto n_ex = serial::read_u64(in);
    std::map<int, std::vector<Exemplar>> per_class;
    for (std::uint64_t i = 0; i < n_ex; ++i) {
        Exemplar e;
        e.sample_id = serial::read_i64(in);
        e.class_id = serial::read_i32(in);
        e.pose = read_pose(in);
        e.azimuth_bin = serial::read_i32(in);
        per_class[e.class_id].push_back(e);
    }
    for (auto& [id, v] : per_class) buffer.insert_class(id, std::move(v));

    Camera camera;
    camera.focal = serial::read_f64(in);
    camera.viewport = serial::read_f64(in);
    camera.width = serial::read_i32(in);
    camera.height = serial::read_i32(in);
    const int tasks_trained = serial::read_i32(in);
    const std::int64_t global_step = serial::read_i64(in);
    const std::uint64_t seed = serial::read_u64(in);

    std::vector<TaskMetrics> history(serial::read_u64(in));
    for (auto& m : history) {
        m.task_index = serial::read_i32(in);
        const auto ids = serial::read_i32_vec(in);
        m.class_ids.assign(ids.begin(), ids.end());
        m.test_accuracy = serial::read_f64(in);
        m.final_epoch_mean_loss = serial::read_f64(in);
    }

    LoadedCheckpoint loaded{TrainState{std::move(extractor), AdamState{}, std::move(partition),
                                       std::move(store), std::move(bank), std::move(buffer),
                                       std::nullopt, Eigen::MatrixXd(0, 0), camera, tasks_trained,
                                       global_step, seed, std::move(history)},
                            std::move(config_echo)};
    loaded.state.adam.reset(loaded.state.extractor.params().size());
    loaded.state.kd_targets =
        Eigen::MatrixXd(loaded.state.extractor.arch().feature_dim(), 0);
    return loaded;
}

}  // namespace incmesh
