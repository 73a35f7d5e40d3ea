#pragma once
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "incmesh/benchgen.hpp"
#include "incmesh/geometry.hpp"
#include "incmesh/image.hpp"

namespace incmesh {

struct DatasetClassInfo {
    int class_id = -1;
    Vec3 dims = Vec3::Ones();
    std::uint64_t appearance_seed = 0;
};

struct SampleRecord {
    std::int64_t id = -1;
    std::int64_t base_id = -1;  // un-occluded source sample
    int class_id = -1;
    Pose pose;
    bool train = true;
    std::string occlusion = "none";
    double occluded_fraction = 0.0;
    std::string file;
};

// On-disk dataset: manifest.json plus one raster file per sample. Rasters are
// binary: magic "RAS1", u32 version, u32 channels (4: RGB + mask), u32
// height, u32 width, then channel-major little-endian float32 data.
struct Dataset {
    std::filesystem::path dir;
    std::uint64_t seed = 0;
    int image_size = 64;
    double viewport = 200.0;
    double focal = 1.0;
    double distance = 5.0;
    double noise_level = 0.0;
    std::vector<DatasetClassInfo> classes;
    std::vector<std::vector<int>> tasks;
    std::vector<SampleRecord> records;

    Camera camera() const { return Camera{focal, viewport, image_size, image_size}; }
    const SampleRecord& record(std::int64_t id) const;
    const DatasetClassInfo& class_info(int class_id) const;
};

struct GenDataParams {
    int num_classes = 8;
    int per_class_train = 100;
    int per_class_test = 20;
    std::string split_spec = "B0+2";
    std::uint64_t seed = 1;
    int image_size = 64;
    double viewport = 200.0;
    double focal = 1.0;
    double distance = 5.0;
    double noise_level = 0.02;
    bool biased_azimuth = false;
    // Occluded variants generated for every test sample, e.g. {"L1","L3"}.
    std::vector<std::string> occlusion_levels;
};

struct GenDataSummary {
    int train_samples = 0;
    int test_samples = 0;
    int records = 0;
    std::string manifest_digest;
};

GenDataSummary generate_dataset(const std::filesystem::path& dir, const GenDataParams& params);

Dataset load_dataset(const std::filesystem::path& dir);

void write_raster(const std::filesystem::path& path, const Image& image,
                  const std::vector<std::uint8_t>& mask);
// Returns the RGB image; fills mask when non-null.
Image read_raster(const std::filesystem::path& path, std::vector<std::uint8_t>* mask = nullptr);

// Preloaded, read-only image store; safe for concurrent lookup once loaded.
class ImageCache {
public:
    explicit ImageCache(const Dataset& dataset) : dataset_(&dataset) {}

    void preload(const std::vector<std::int64_t>& ids);
    void preload_all();
    const Image* get(std::int64_t id) const;

private:
    const Dataset* dataset_;
    std::map<std::int64_t, Image> images_;
};

}  // namespace incmesh
