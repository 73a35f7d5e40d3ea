#include "incmesh/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "incmesh/error.hpp"
#include "incmesh/parallel.hpp"

namespace incmesh {

int TrainConfig::effective_population() const {
    if (population_size > 0) return population_size;
    const std::int64_t m = 16LL * target_vertices * max_classes;
    return static_cast<int>(std::min<std::int64_t>(m, 1LL << 20));
}

std::vector<std::string> TrainConfig::validate() const {
    require(kappa1 > 0.0 && kappa2 > 0.0 && kappa3 > 0.0, "concentrations must be positive");
    require(lambda_etf >= 0.0 && lambda_kd >= 0.0, "loss weights must be nonnegative");
    require(eta >= 0.0 && eta <= 1.0, "eta must be in [0,1]");
    require(epochs_per_task >= 1, "epochs_per_task must be >= 1");
    require(lr > 0.0, "lr must be positive");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(feature_dim >= 2, "feature_dim must be >= 2");
    require(max_classes >= 2, "max_classes must be >= 2");
    require(feature_dim >= max_classes, "feature_dim must be >= max_classes");
    require(target_vertices >= 8, "target_vertices must be >= 8");
    require(neighbor_radius_frac >= 0.0, "neighbor_radius_frac must be >= 0");
    require(bank_capacity >= 1 && bank_update_count >= 0, "bank sizes must be valid");
    require(bank_update_count <= bank_capacity, "bank_update_count exceeds capacity");
    require(unused_pool_sample >= 0, "unused_pool_sample must be >= 0");
    require(replay_capacity >= 1 && azimuth_bins >= 1, "replay sizes must be positive");
    require(image_size >= 8, "image_size must be >= 8");
    require(viewport > 0.0 && focal > 0.0 && distance > 0.0, "camera values must be positive");

    std::vector<std::string> warnings;
    if (kappa3 >= 1.0)
        warnings.push_back("kappa3 >= 1: distillation gradients may be too peaked");
    return warnings;
}

TrainState make_train_state(const TrainConfig& config, std::uint64_t seed) {
    config.validate();
    TrainState state{
        FeatureExtractor(ArchDescriptor::standard(config.feature_dim), seed),
        AdamState{},
        make_latent_partition(config.max_classes, config.feature_dim, config.effective_population(),
                              seed),
        MeshStore{},
        BackgroundBank::make(config.feature_dim, config.bank_capacity, seed),
        ReplayBuffer(config.replay_capacity, config.azimuth_bins),
        std::nullopt,
        Eigen::MatrixXd(config.feature_dim, 0),
        Camera{config.focal, config.viewport, config.image_size, config.image_size},
        0,
        0,
        seed,
        {}};
    state.adam.reset(state.extractor.params().size());
    return state;
}

SampleLossResult combined_loss(const Image& image, int class_id, const Pose& pose,
                               const TrainState& state, const TrainConfig& config,
                               const Eigen::MatrixXd& pool_sample) {
    SampleLossResult out;
    out.render = rasterize(state.store.get(class_id).geometry, pose, state.feature_camera());
    out.features = state.extractor.forward(image);
    out.correspondences = gather_correspondences(out.features, out.render);
    for (const auto& c : out.correspondences)
        if (c.visible) out.visible_count += 1;

    out.param_grad = Eigen::VectorXd::Zero(state.extractor.params().size());
    if (out.visible_count == 0) return out;
    const double inv_v = 1.0 / out.visible_count;

    Eigen::MatrixXd dfeat =
        Eigen::MatrixXd::Zero(config.feature_dim, static_cast<Eigen::Index>(out.correspondences.size()));

    const LossResult cont =
        loss_cont(out.correspondences, state.store, class_id, state.bank, pool_sample, config.kappa1);
    out.terms.cont = cont.value * inv_v;
    dfeat += cont.dfeature * inv_v;

    if (config.use_etf) {
        const LossResult etf =
            loss_etf(out.correspondences, state.partition.centroids, class_id, config.kappa2);
        out.terms.etf = etf.value * inv_v;
        dfeat += config.lambda_etf * inv_v * etf.dfeature;
    }

    if (config.use_kd && state.snapshot.has_value() && state.kd_targets.cols() > 0) {
        const FeatureMap old_features = state.snapshot->forward(image);
        const auto corrs_old = gather_correspondences(old_features, out.render);
        const LossResult kd = loss_kd(out.correspondences, corrs_old, state.kd_targets, config.kappa3);
        out.terms.kd = kd.value * inv_v;
        dfeat += config.lambda_kd * inv_v * kd.dfeature;
    }

    out.terms.total = out.terms.cont + config.lambda_etf * out.terms.etf + config.lambda_kd * out.terms.kd;

    // Fold per-correspondence gradients into a per-pixel gradient map
    // (several vertices may share a pixel) and push through the extractor.
    Eigen::MatrixXd grad_map = Eigen::MatrixXd::Zero(out.features.data.rows(), out.features.data.cols());
    for (std::size_t i = 0; i < out.correspondences.size(); ++i) {
        const auto& c = out.correspondences[i];
        if (!c.visible) continue;
        grad_map.col(out.features.index(c.row, c.col)) += dfeat.col(static_cast<Eigen::Index>(i));
    }
    out.param_grad = state.extractor.backward(image, grad_map);
    return out;
}

std::string format_trace(const StepTrace& t) {
    std::ostringstream os;
    os << "{\"step\":" << t.step << ",\"epoch\":" << t.epoch << ",\"task\":" << t.task
       << ",\"l_cont\":" << t.l_cont << ",\"l_etf\":" << t.l_etf << ",\"l_kd\":" << t.l_kd
       << ",\"total\":" << t.total << "}";
    return os.str();
}

namespace {

struct StreamItem {
    std::int64_t id = -1;
    int class_id = -1;
    Pose pose;
    bool is_replay = false;
};

void allocate_task_meshes(const TaskData& task, TrainState& state, const TrainConfig& config) {
    for (const int class_id : task.class_ids) {
        if (state.store.has(class_id))
            throw AlreadyAllocatedError("class " + std::to_string(class_id) + " already trained");
        const auto dims_it = task.class_dims.find(class_id);
        require(dims_it != task.class_dims.end(), "missing cuboid dims for class");

        NeuralMesh mesh;
        mesh.class_id = class_id;
        mesh.geometry = build_cuboid(dims_it->second, config.target_vertices);
        mesh.neighborhoods = vertex_neighborhood(
            mesh.geometry, config.neighbor_radius_frac * mesh.geometry.diagonal());
        mesh.theta = allocate_class(state.partition, class_id, mesh.geometry.vertex_count(),
                                    seed_combine(state.seed, static_cast<std::uint64_t>(class_id)));
        state.store.add(std::move(mesh));
    }
}

}  // namespace

std::vector<StepTrace> train_task(const TaskData& task, TrainState& state, const TrainConfig& config,
                                  const ImageLookup& images) {
    config.validate();
    require(!task.class_ids.empty(), "task has no classes");

    // Distillation targets are the meshes as they stand when the task starts.
    if (state.tasks_trained > 0 && config.use_kd) {
        state.snapshot = snapshot(state.extractor);
        state.kd_targets = state.store.concat_theta();
    } else {
        state.snapshot.reset();
        state.kd_targets = Eigen::MatrixXd(config.feature_dim, 0);
    }

    allocate_task_meshes(task, state, config);

    std::vector<StreamItem> stream;
    for (const auto& s : task.samples) stream.push_back({s.id, s.class_id, s.pose, false});
    if (config.use_replay)
        for (const auto& e : state.buffer.all())
            stream.push_back({e.sample_id, e.class_id, e.pose, true});

    const int task_index = state.tasks_trained;
    Rng task_rng(seed_combine(state.seed, 0x5441534bULL + static_cast<std::uint64_t>(task_index)));
    std::vector<StepTrace> trace;

    for (int epoch = 0; epoch < config.epochs_per_task; ++epoch) {
        const double lr = epoch >= config.lr_halve_epoch ? config.lr * 0.5 : config.lr;
        Rng epoch_rng = task_rng.fork(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(stream);

        for (std::size_t start = 0; start < stream.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const int n = static_cast<int>(
                std::min<std::size_t>(config.batch_size, stream.size() - start));
            const Eigen::MatrixXd pool_sample =
                sample_unused_pool(state.partition, config.unused_pool_sample, epoch_rng);

            std::vector<SampleLossResult> results(static_cast<std::size_t>(n));
            parallel_for(n, [&](int i) {
                const auto& item = stream[start + static_cast<std::size_t>(i)];
                const Image* image = images(item.id);
                require(image != nullptr, "missing image for sample");
                results[static_cast<std::size_t>(i)] =
                    combined_loss(*image, item.class_id, item.pose, state, config, pool_sample);
            });

            Eigen::VectorXd grad = Eigen::VectorXd::Zero(state.extractor.params().size());
            StepTrace t;
            t.step = state.global_step;
            t.epoch = epoch;
            t.task = task_index;
            for (const auto& r : results) {
                grad += r.param_grad;
                t.l_cont += r.terms.cont;
                t.l_etf += r.terms.etf;
                t.l_kd += r.terms.kd;
                t.total += r.terms.total;
            }
            grad /= n;
            t.l_cont /= n;
            t.l_etf /= n;
            t.l_kd /= n;
            t.total /= n;
            if (!std::isfinite(t.total)) throw DivergenceError("non-finite training loss");

            adam_step(state.extractor.mutable_params(), grad, state.adam, lr,
                      AdamParams{0.9, 0.999, 1e-8, config.weight_decay});

            for (int i = 0; i < n; ++i) {
                const auto& item = stream[start + static_cast<std::size_t>(i)];
                const auto& r = results[static_cast<std::size_t>(i)];
                if (!item.is_replay || config.momentum_on_replay)
                    momentum_update(state.store.get_mutable(item.class_id), r.correspondences,
                                    config.eta);
                Rng bg_rng = epoch_rng.fork(0xb6000000ULL + static_cast<std::uint64_t>(state.global_step) * 64 +
                                            static_cast<std::uint64_t>(i));
                bg_update(state.bank, r.features, r.render, config.bank_update_count, bg_rng);
            }

            trace.push_back(t);
            state.global_step += 1;
        }
    }

    if (config.use_replay) {
        const int classes_after = state.store.size();
        const int slots = std::max(1, (config.replay_capacity + classes_after - 1) / classes_after);
        for (const int class_id : task.class_ids) {
            std::vector<Exemplar> candidates;
            for (const auto& s : task.samples)
                if (s.class_id == class_id) candidates.push_back({s.id, s.class_id, s.pose, 0});
            const auto selection = select_exemplars(
                candidates, slots, config.azimuth_bins,
                seed_combine(state.seed, 0x4558454dULL + static_cast<std::uint64_t>(class_id)));
            state.buffer.insert_class(class_id, selection.exemplars);
        }
        state.buffer.rebalance(classes_after, seed_combine(state.seed, 0x52424c43ULL +
                                                                          static_cast<std::uint64_t>(task_index)));
        bg_balance(state, config, images,
                   seed_combine(state.seed, 0x42414c41ULL + static_cast<std::uint64_t>(task_index)));
    }

    state.snapshot.reset();
    state.kd_targets = Eigen::MatrixXd(config.feature_dim, 0);
    state.tasks_trained += 1;
    return trace;
}

void bg_balance(TrainState& state, const TrainConfig& config, const ImageLookup& images,
                std::uint64_t seed) {
    const auto class_ids = state.buffer.class_ids();
    if (class_ids.empty()) return;
    const int capacity = state.bank.capacity();
    const int quota = capacity / static_cast<int>(class_ids.size());
    const int remainder = capacity % static_cast<int>(class_ids.size());

    const Camera cam = state.feature_camera();
    Eigen::MatrixXd fresh(config.feature_dim, capacity);
    Eigen::Index col = 0;
    Rng rng(seed_combine(seed, 0x42474241ULL));

    for (std::size_t rank = 0; rank < class_ids.size(); ++rank) {
        const int class_id = class_ids[rank];
        const int want = quota + (static_cast<int>(rank) < remainder ? 1 : 0);
        if (want == 0) continue;

        std::vector<Eigen::VectorXd> candidates;
        for (const auto& e : state.buffer.exemplars_of(class_id)) {
            const Image* image = images(e.sample_id);
            require(image != nullptr, "missing exemplar image");
            const FeatureMap fm = state.extractor.forward(*image);
            const RenderResult rr = rasterize(state.store.get(class_id).geometry, e.pose, cam);
            for (int p = 0; p < fm.rows * fm.cols; ++p)
                if (rr.object_mask[static_cast<std::size_t>(p)] == 0 &&
                    rr.vertex_of_pixel[static_cast<std::size_t>(p)] == RenderResult::kBackground)
                    candidates.push_back(fm.data.col(p));
        }
        if (candidates.empty()) continue;

        const int n = static_cast<int>(candidates.size());
        if (want <= n) {
            const auto pick = rng.sample_without_replacement(n, want);
            for (const int j : pick) fresh.col(col++) = candidates[static_cast<std::size_t>(j)];
        } else {
            for (int i = 0; i < want; ++i)
                fresh.col(col++) = candidates[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
        }
    }

    // Classes without background pixels leave a shortfall; keep existing
    // entries in those slots.
    for (Eigen::Index i = 0; i < col; ++i) state.bank.features.col(i) = fresh.col(i);
    std::fill(state.bank.ages.begin(), state.bank.ages.begin() + col, 0);
}

}  // namespace incmesh
