#include "incmesh/config.hpp"

#include <fstream>
#include <sstream>

#include "incmesh/error.hpp"

namespace incmesh {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidArgument("bad boolean value: " + v);
}

double parse_double(const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw InvalidArgument("bad number: " + v);
        return d;
    } catch (const std::exception&) {
        throw InvalidArgument("bad number: " + v);
    }
}

int parse_int(const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw InvalidArgument("bad integer: " + v);
        return static_cast<int>(i);
    } catch (const std::exception&) {
        throw InvalidArgument("bad integer: " + v);
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    ExperimentConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no += 1;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
        config.set_key(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return config;
}

void ExperimentConfig::apply_override(const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value: " + key_eq_value);
    set_key(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    auto& t = train;
    if (key == "kappa1") t.kappa1 = parse_double(value);
    else if (key == "kappa2") t.kappa2 = parse_double(value);
    else if (key == "kappa3") t.kappa3 = parse_double(value);
    else if (key == "lambda_etf") t.lambda_etf = parse_double(value);
    else if (key == "lambda_kd") t.lambda_kd = parse_double(value);
    else if (key == "preset") {
        if (value == "main") {
            t.lambda_etf = 0.2;
            t.lambda_kd = 2.0;
        } else if (value == "supplementary") {
            t.lambda_etf = 0.1;
            t.lambda_kd = 10.0;
        } else {
            throw InvalidArgument("unknown preset: " + value);
        }
        lambda_preset = value;
    } else if (key == "use_replay") t.use_replay = parse_bool(value);
    else if (key == "use_kd") t.use_kd = parse_bool(value);
    else if (key == "use_etf") t.use_etf = parse_bool(value);
    else if (key == "momentum_on_replay") t.momentum_on_replay = parse_bool(value);
    else if (key == "eta") t.eta = parse_double(value);
    else if (key == "epochs_per_task") t.epochs_per_task = parse_int(value);
    else if (key == "lr") t.lr = parse_double(value);
    else if (key == "lr_halve_epoch") t.lr_halve_epoch = parse_int(value);
    else if (key == "weight_decay") t.weight_decay = parse_double(value);
    else if (key == "batch_size") t.batch_size = parse_int(value);
    else if (key == "feature_dim") t.feature_dim = parse_int(value);
    else if (key == "max_classes") t.max_classes = parse_int(value);
    else if (key == "target_vertices") t.target_vertices = parse_int(value);
    else if (key == "neighbor_radius_frac") t.neighbor_radius_frac = parse_double(value);
    else if (key == "population_size") t.population_size = parse_int(value);
    else if (key == "bank_capacity") t.bank_capacity = parse_int(value);
    else if (key == "bank_update_count") t.bank_update_count = parse_int(value);
    else if (key == "unused_pool_sample") t.unused_pool_sample = parse_int(value);
    else if (key == "replay_capacity") t.replay_capacity = parse_int(value);
    else if (key == "azimuth_bins") t.azimuth_bins = parse_int(value);
    else if (key == "image_size") t.image_size = parse_int(value);
    else if (key == "viewport") t.viewport = parse_double(value);
    else if (key == "focal") t.focal = parse_double(value);
    else if (key == "distance") t.distance = parse_double(value);
    else if (key == "dataset_dir") dataset_dir = value;
    else if (key == "checkpoint_dir") checkpoint_dir = value;
    else if (key == "split_spec") split_spec = value;
    else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "eval_occlusion") eval_occlusion = value;
    else if (key == "template_count") template_count = parse_int(value);
    else if (key == "pose_threshold_loose") pose_threshold_loose = parse_double(value);
    else if (key == "pose_threshold_tight") pose_threshold_tight = parse_double(value);
    else throw InvalidArgument("unknown config key: " + key);
}

std::string ExperimentConfig::to_key_value_text() const {
    std::ostringstream os;
    os.precision(17);
    const auto& t = train;
    os << "kappa1=" << t.kappa1 << '\n'
       << "kappa2=" << t.kappa2 << '\n'
       << "kappa3=" << t.kappa3 << '\n'
       << "lambda_etf=" << t.lambda_etf << '\n'
       << "lambda_kd=" << t.lambda_kd << '\n'
       << "use_replay=" << (t.use_replay ? "true" : "false") << '\n'
       << "use_kd=" << (t.use_kd ? "true" : "false") << '\n'
       << "use_etf=" << (t.use_etf ? "true" : "false") << '\n'
       << "momentum_on_replay=" << (t.momentum_on_replay ? "true" : "false") << '\n'
       << "eta=" << t.eta << '\n'
       << "epochs_per_task=" << t.epochs_per_task << '\n'
       << "lr=" << t.lr << '\n'
       << "lr_halve_epoch=" << t.lr_halve_epoch << '\n'
       << "weight_decay=" << t.weight_decay << '\n'
       << "batch_size=" << t.batch_size << '\n'
       << "feature_dim=" << t.feature_dim << '\n'
       << "max_classes=" << t.max_classes << '\n'
       << "target_vertices=" << t.target_vertices << '\n'
       << "neighbor_radius_frac=" << t.neighbor_radius_frac << '\n'
       << "population_size=" << t.population_size << '\n'
       << "bank_capacity=" << t.bank_capacity << '\n'
       << "bank_update_count=" << t.bank_update_count << '\n'
       << "unused_pool_sample=" << t.unused_pool_sample << '\n'
       << "replay_capacity=" << t.replay_capacity << '\n'
       << "azimuth_bins=" << t.azimuth_bins << '\n'
       << "image_size=" << t.image_size << '\n'
       << "viewport=" << t.viewport << '\n'
       << "focal=" << t.focal << '\n'
       << "distance=" << t.distance << '\n'
       << "dataset_dir=" << dataset_dir << '\n'
       << "checkpoint_dir=" << checkpoint_dir << '\n'
       << "split_spec=" << split_spec << '\n'
       << "seed=" << seed << '\n'
       << "eval_occlusion=" << eval_occlusion << '\n'
       << "template_count=" << template_count << '\n'
       << "pose_threshold_loose=" << pose_threshold_loose << '\n'
       << "pose_threshold_tight=" << pose_threshold_tight << '\n'
       << "preset=" << lambda_preset << '\n';
    return os.str();
}

}  // namespace incmesh
