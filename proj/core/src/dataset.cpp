#include "incmesh/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "incmesh/digest.hpp"
#include "incmesh/error.hpp"
#include "incmesh/rng.hpp"
#include "incmesh/serial.hpp"
#include "incmesh/version.hpp"

namespace incmesh {

using nlohmann::json;

namespace {

constexpr char kRasterMagic[4] = {'R', 'A', 'S', '1'};

std::string sample_file_name(std::int64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%06lld.ras", static_cast<long long>(id));
    return buf;
}

json pose_to_json(const Pose& p) {
    return json{{"azimuth", p.azimuth},
                {"elevation", p.elevation},
                {"roll", p.roll},
                {"distance", p.distance}};
}

Pose pose_from_json(const json& j) {
    Pose p;
    p.azimuth = j.at("azimuth").get<double>();
    p.elevation = j.at("elevation").get<double>();
    p.roll = j.at("roll").get<double>();
    p.distance = j.at("distance").get<double>();
    return p;
}

}  // namespace

const SampleRecord& Dataset::record(std::int64_t id) const {
    for (const auto& r : records)
        if (r.id == id) return r;
    throw NotFoundError("no sample record with id " + std::to_string(id));
}

const DatasetClassInfo& Dataset::class_info(int class_id) const {
    for (const auto& c : classes)
        if (c.class_id == class_id) return c;
    throw NotFoundError("no class info for id " + std::to_string(class_id));
}

void write_raster(const std::filesystem::path& path, const Image& image,
                  const std::vector<std::uint8_t>& mask) {
    require(mask.size() == static_cast<std::size_t>(image.rows) * image.cols,
            "mask/image size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write raster: " + path.string());
    out.write(kRasterMagic, 4);
    serial::write_u32(out, kRasterVersion);
    serial::write_u32(out, 4);
    serial::write_u32(out, static_cast<std::uint32_t>(image.rows));
    serial::write_u32(out, static_cast<std::uint32_t>(image.cols));
    std::vector<float> buf(static_cast<std::size_t>(4) * image.rows * image.cols);
    const std::size_t ch_px = static_cast<std::size_t>(image.rows) * image.cols;
    for (std::size_t i = 0; i < 3 * ch_px; ++i) buf[i] = static_cast<float>(image.data[i]);
    for (std::size_t i = 0; i < ch_px; ++i) buf[3 * ch_px + i] = mask[i] ? 1.0f : 0.0f;
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("short write: " + path.string());
}

Image read_raster(const std::filesystem::path& path, std::vector<std::uint8_t>* mask) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read raster: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kRasterMagic, 4) != 0)
        throw IoError("bad raster magic: " + path.string());
    const auto version = serial::read_u32(in);
    if (version != kRasterVersion) throw IoError("unsupported raster version");
    const auto channels = serial::read_u32(in);
    const auto rows = serial::read_u32(in);
    const auto cols = serial::read_u32(in);
    require(channels == 4, "raster must have 4 channels");

    std::vector<float> buf(static_cast<std::size_t>(channels) * rows * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("truncated raster: " + path.string());

    Image image(static_cast<int>(rows), static_cast<int>(cols));
    const std::size_t ch_px = static_cast<std::size_t>(rows) * cols;
    for (std::size_t i = 0; i < 3 * ch_px; ++i) image.data[i] = buf[i];
    if (mask) {
        mask->assign(ch_px, 0);
        for (std::size_t i = 0; i < ch_px; ++i) (*mask)[i] = buf[3 * ch_px + i] > 0.5f ? 1 : 0;
    }
    return image;
}

GenDataSummary generate_dataset(const std::filesystem::path& dir, const GenDataParams& params) {
    require(params.num_classes >= 1, "num_classes must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory: " + dir.string());

    std::vector<OcclusionLevel> occ_levels;
    for (const auto& name : params.occlusion_levels)
        occ_levels.push_back(occlusion_level_from_string(name));

    const DatasetPlan plan =
        build_task_sequence(params.num_classes, params.split_spec, params.per_class_train,
                            params.per_class_test, params.seed, params.distance, params.biased_azimuth);
    const Camera camera{params.focal, params.viewport, params.image_size, params.image_size};

    std::vector<ClassAppearance> appearances;
    for (int c = 0; c < params.num_classes; ++c)
        appearances.push_back(make_class_appearance(c, params.seed));

    json manifest;
    manifest["format_version"] = kReportSchemaVersion;
    manifest["seed"] = params.seed;
    manifest["image_size"] = params.image_size;
    manifest["viewport"] = params.viewport;
    manifest["focal"] = params.focal;
    manifest["distance"] = params.distance;
    manifest["noise_level"] = params.noise_level;
    manifest["split_spec"] = params.split_spec;
    manifest["tasks"] = plan.tasks;
    manifest["classes"] = json::array();
    for (const auto& app : appearances) {
        manifest["classes"].push_back(json{{"id", app.class_id},
                                           {"dims", {app.dims[0], app.dims[1], app.dims[2]}},
                                           {"appearance_seed", params.seed}});
    }

    GenDataSummary summary;
    json samples = json::array();
    std::int64_t next_id = 0;
    const auto emit = [&](const Sample& s, std::int64_t base_id, bool train) {
        const std::int64_t id = next_id++;
        const std::string file = sample_file_name(id);
        write_raster(dir / file, s.image, s.object_mask);
        samples.push_back(json{{"id", id},
                               {"base_id", base_id},
                               {"class", s.class_id},
                               {"pose", pose_to_json(s.pose)},
                               {"train", train},
                               {"occlusion", s.occlusion},
                               {"occluded_fraction", s.occluded_fraction},
                               {"file", file}});
        return id;
    };

    for (const auto& entry : plan.samples) {
        const Sample rendered =
            render_sample(appearances[static_cast<std::size_t>(entry.class_id)], entry.pose, camera,
                          seed_combine(params.seed, 0x53414d50ULL + static_cast<std::uint64_t>(entry.id)),
                          params.noise_level);
        const std::int64_t base_id = emit(rendered, -1, entry.train);
        if (entry.train) {
            summary.train_samples += 1;
        } else {
            summary.test_samples += 1;
            for (const auto level : occ_levels) {
                const Sample occluded = occlude(
                    rendered, level,
                    seed_combine(params.seed, 0x4f434353ULL + static_cast<std::uint64_t>(entry.id)));
                emit(occluded, base_id, false);
            }
        }
    }
    manifest["samples"] = std::move(samples);

    const auto manifest_path = dir / "manifest.json";
    {
        std::ofstream out(manifest_path);
        if (!out) throw IoError("cannot write manifest: " + manifest_path.string());
        out << manifest.dump(2) << '\n';
    }
    summary.records = static_cast<int>(next_id);
    summary.manifest_digest = file_digest(manifest_path.string());
    return summary;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot read manifest: " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError("bad manifest json: " + std::string(e.what()));
    }

    Dataset ds;
    ds.dir = dir;
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.image_size = manifest.at("image_size").get<int>();
    ds.viewport = manifest.at("viewport").get<double>();
    ds.focal = manifest.at("focal").get<double>();
    ds.distance = manifest.at("distance").get<double>();
    ds.noise_level = manifest.at("noise_level").get<double>();
    ds.tasks = manifest.at("tasks").get<std::vector<std::vector<int>>>();
    for (const auto& c : manifest.at("classes")) {
        DatasetClassInfo info;
        info.class_id = c.at("id").get<int>();
        const auto dims = c.at("dims");
        info.dims = Vec3(dims.at(0).get<double>(), dims.at(1).get<double>(), dims.at(2).get<double>());
        info.appearance_seed = c.at("appearance_seed").get<std::uint64_t>();
        ds.classes.push_back(info);
    }
    for (const auto& s : manifest.at("samples")) {
        SampleRecord r;
        r.id = s.at("id").get<std::int64_t>();
        r.base_id = s.at("base_id").get<std::int64_t>();
        r.class_id = s.at("class").get<int>();
        r.pose = pose_from_json(s.at("pose"));
        r.train = s.at("train").get<bool>();
        r.occlusion = s.at("occlusion").get<std::string>();
        r.occluded_fraction = s.at("occluded_fraction").get<double>();
        r.file = s.at("file").get<std::string>();
        ds.records.push_back(std::move(r));
    }
    return ds;
}

void ImageCache::preload(const std::vector<std::int64_t>& ids) {
    for (const auto id : ids) {
        if (images_.count(id) > 0) continue;
        const auto& rec = dataset_->record(id);
        images_.emplace(id, read_raster(dataset_->dir / rec.file));
    }
}

void ImageCache::preload_all() {
    for (const auto& rec : dataset_->records)
        if (images_.count(rec.id) == 0)
            images_.emplace(rec.id, read_raster(dataset_->dir / rec.file));
}

const Image* ImageCache::get(std::int64_t id) const {
    const auto it = images_.find(id);
    return it == images_.end() ? nullptr : &it->second;
}

}  // namespace incmesh
