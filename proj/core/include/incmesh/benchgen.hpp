#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "incmesh/geometry.hpp"
#include "incmesh/image.hpp"

namespace incmesh {

// Two-color stripe pattern over a cuboid side's surface coordinates.
struct FaceTexture {
    Eigen::Vector3d color_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d color_b = Eigen::Vector3d::Zero();
    double freq_u = 1.0;
    double freq_v = 1.0;
    double phase = 0.0;
};

struct ClassAppearance {
    int class_id = -1;
    Vec3 dims = Vec3::Ones();
    std::array<FaceTexture, 6> faces;  // x+,x-,y+,y-,z+,z-
};

// Deterministic per (class, seed); distinct classes get distinct hues.
ClassAppearance make_class_appearance(int class_id, std::uint64_t seed);

Eigen::Vector3d texture_color(const FaceTexture& tex, double u, double v);

struct Sample {
    std::int64_t id = -1;
    int class_id = -1;
    Pose pose;
    Image image;
    std::vector<std::uint8_t> object_mask;  // image resolution
    std::string occlusion = "none";
    double occluded_fraction = 0.0;
};

// Textured cuboid over a procedural background plus additive Gaussian pixel
// noise (clamped back to [0,1]).
Sample render_sample(const ClassAppearance& appearance, const Pose& pose, const Camera& camera,
                     std::uint64_t background_seed, double noise_level);

enum class OcclusionLevel { L1, L2, L3 };

OcclusionLevel occlusion_level_from_string(const std::string& name);
std::string occlusion_level_name(OcclusionLevel level);
// Occluded object-mask fraction range per level: L1 [0.2,0.4], L2 [0.4,0.6],
// L3 [0.6,0.8].
std::pair<double, double> occlusion_range(OcclusionLevel level);

// Superimposes textured rectangles until the occluded fraction of the object
// mask lands in the level's range; the sample mask drops occluded pixels.
// Throws GenerationError when 100 attempts cannot reach the range.
Sample occlude(const Sample& sample, OcclusionLevel level, std::uint64_t seed);

// Sample generation plan: task class groups plus per-sample class/pose/split
// assignments. Poses draw azimuth in [0,2pi), elevation in [-pi/3,pi/3],
// roll in [-pi/6,pi/6].
struct SamplePlanEntry {
    std::int64_t id = -1;
    int class_id = -1;
    Pose pose;
    bool train = true;
};

struct DatasetPlan {
    std::vector<std::vector<int>> tasks;
    std::vector<SamplePlanEntry> samples;
};

// split_spec "B<base>+<inc>": optional base task then evenly sized
// increments covering all classes; classes are shuffled by seed first.
std::vector<std::vector<int>> split_classes(int num_classes, const std::string& split_spec,
                                            std::uint64_t seed);

DatasetPlan build_task_sequence(int num_classes, const std::string& split_spec, int per_class_train,
                                int per_class_test, std::uint64_t seed, double distance = 5.0,
                                bool biased_azimuth = false);

}  // namespace incmesh
