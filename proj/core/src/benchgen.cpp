#include "incmesh/benchgen.hpp"

#include <algorithm>
#include <cmath>

#include "incmesh/error.hpp"
#include "incmesh/rng.hpp"

namespace incmesh {

namespace {

Eigen::Vector3d hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = std::fmod(h, 1.0) * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) {
        r = c; g = x;
    } else if (hp < 2) {
        r = x; g = c;
    } else if (hp < 3) {
        g = c; b = x;
    } else if (hp < 4) {
        g = x; b = c;
    } else if (hp < 5) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

// Side of the cuboid a surface point lies on: 0..5 = x+,x-,y+,y-,z+,z-.
int side_of_point(const Vec3& p, const Vec3& dims) {
    int best_axis = 0;
    double best = -1.0;
    for (int a = 0; a < 3; ++a) {
        const double r = std::abs(p[a]) / (0.5 * dims[a]);
        if (r > best) {
            best = r;
            best_axis = a;
        }
    }
    return 2 * best_axis + (p[best_axis] >= 0.0 ? 0 : 1);
}

double smooth_background(double x, double y, const std::array<double, 9>& p) {
    const double v = 0.5 + 0.22 * std::sin(2.0 * kPi * (p[0] * x + p[1] * y) + p[2]) +
                     0.16 * std::sin(2.0 * kPi * (p[3] * x + p[4] * y) + p[5]) +
                     0.10 * std::sin(2.0 * kPi * (p[6] * x * y + p[7] * (x - y)) + p[8]);
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

ClassAppearance make_class_appearance(int class_id, std::uint64_t seed) {
    require(class_id >= 0, "class_id must be >= 0");
    Rng rng(seed_combine(seed, 0x41505045ULL + static_cast<std::uint64_t>(class_id)));

    ClassAppearance app;
    app.class_id = class_id;
    for (int a = 0; a < 3; ++a) app.dims[a] = rng.uniform(0.8, 1.3);

    // Golden-ratio hue spacing keeps class base colors distinct for any
    // class count under a shared seed.
    const double base_hue = std::fmod(0.61803398875 * class_id + rng.uniform(), 1.0);
    for (int f = 0; f < 6; ++f) {
        FaceTexture& tex = app.faces[static_cast<std::size_t>(f)];
        const double hue = std::fmod(base_hue + 0.07 * f + rng.uniform(0.0, 0.03), 1.0);
        tex.color_a = hsv_to_rgb(hue, rng.uniform(0.55, 0.95), rng.uniform(0.7, 1.0));
        tex.color_b = hsv_to_rgb(std::fmod(hue + rng.uniform(0.35, 0.6), 1.0),
                                 rng.uniform(0.4, 0.9), rng.uniform(0.25, 0.6));
        tex.freq_u = rng.uniform(1.0, 5.0);
        tex.freq_v = rng.uniform(0.0, 4.0);
        tex.phase = rng.uniform(0.0, 2.0 * kPi);
    }
    return app;
}

Eigen::Vector3d texture_color(const FaceTexture& tex, double u, double v) {
    const double m = 0.5 + 0.5 * std::sin(2.0 * kPi * (tex.freq_u * u + tex.freq_v * v) + tex.phase);
    return m * tex.color_a + (1.0 - m) * tex.color_b;
}

Sample render_sample(const ClassAppearance& appearance, const Pose& pose, const Camera& camera,
                     std::uint64_t background_seed, double noise_level) {
    require(noise_level >= 0.0, "noise_level must be >= 0");
    const CuboidMesh mesh = build_cuboid(appearance.dims, 8);
    const FaceRaster fr = rasterize_faces(mesh, pose, camera);

    Sample sample;
    sample.class_id = appearance.class_id;
    sample.pose = pose.canonicalized();
    sample.image = Image(camera.height, camera.width);
    sample.object_mask.assign(static_cast<std::size_t>(camera.height) * camera.width, 0);

    Rng bg_rng(seed_combine(background_seed, 0x42474e44ULL));
    std::array<std::array<double, 9>, 3> bg_params;
    for (auto& ch : bg_params) {
        for (int i = 0; i < 3; ++i) {
            ch[static_cast<std::size_t>(3 * i)] = bg_rng.uniform(0.5, 4.0);
            ch[static_cast<std::size_t>(3 * i + 1)] = bg_rng.uniform(0.5, 4.0);
            ch[static_cast<std::size_t>(3 * i + 2)] = bg_rng.uniform(0.0, 2.0 * kPi);
        }
    }

    Rng noise_rng(seed_combine(background_seed, 0x4e4f4953ULL));
    for (int row = 0; row < camera.height; ++row) {
        for (int col = 0; col < camera.width; ++col) {
            const std::size_t p = static_cast<std::size_t>(fr.index(row, col));
            Eigen::Vector3d rgb;
            const SurfaceHit& hit = fr.hits[p];
            if (hit.face >= 0) {
                sample.object_mask[p] = 1;
                // Perspective-correct surface point from the screen-space
                // barycentrics and vertex depths.
                const auto& tri = mesh.faces[static_cast<std::size_t>(hit.face)];
                double wsum = 0.0;
                Vec3 point = Vec3::Zero();
                for (int i = 0; i < 3; ++i) {
                    const double w = hit.bary[i] / fr.vertex_depth[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
                    point += w * mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
                    wsum += w;
                }
                point /= wsum;
                const int side = side_of_point(point, appearance.dims);
                const int axis = side / 2;
                const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
                const double u = point[ua] / appearance.dims[ua] + 0.5;
                const double v = point[va] / appearance.dims[va] + 0.5;
                rgb = texture_color(appearance.faces[static_cast<std::size_t>(side)], u, v);
            } else {
                const double x = static_cast<double>(col) / camera.width;
                const double y = static_cast<double>(row) / camera.height;
                for (int c = 0; c < 3; ++c) rgb[c] = smooth_background(x, y, bg_params[static_cast<std::size_t>(c)]);
            }
            for (int c = 0; c < 3; ++c) {
                double val = rgb[c];
                if (noise_level > 0.0) val += noise_level * noise_rng.normal();
                sample.image.at(c, row, col) = std::clamp(val, 0.0, 1.0);
            }
        }
    }
    return sample;
}

OcclusionLevel occlusion_level_from_string(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "l1") return OcclusionLevel::L1;
    if (s == "l2") return OcclusionLevel::L2;
    if (s == "l3") return OcclusionLevel::L3;
    throw InvalidArgument("unknown occlusion level: " + name);
}

std::string occlusion_level_name(OcclusionLevel level) {
    switch (level) {
        case OcclusionLevel::L1: return "L1";
        case OcclusionLevel::L2: return "L2";
        case OcclusionLevel::L3: return "L3";
    }
    return "L1";
}

std::pair<double, double> occlusion_range(OcclusionLevel level) {
    switch (level) {
        case OcclusionLevel::L1: return {0.20, 0.40};
        case OcclusionLevel::L2: return {0.40, 0.60};
        case OcclusionLevel::L3: return {0.60, 0.80};
    }
    return {0.20, 0.40};
}

Sample occlude(const Sample& sample, OcclusionLevel level, std::uint64_t seed) {
    const auto [lo, hi] = occlusion_range(level);
    const int h = sample.image.rows, w = sample.image.cols;

    // Object bounding box guides occluder placement.
    int r0 = h, r1 = -1, c0 = w, c1 = -1;
    std::int64_t object_px = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!sample.object_mask[static_cast<std::size_t>(r) * w + c]) continue;
            object_px += 1;
            r0 = std::min(r0, r);
            r1 = std::max(r1, r);
            c0 = std::min(c0, c);
            c1 = std::max(c1, c);
        }
    }
    if (object_px == 0) throw GenerationError("cannot occlude a sample with an empty mask");
    const int bh = r1 - r0 + 1, bw = c1 - c0 + 1;

    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed_combine(seed, 0x4f43434cULL + static_cast<std::uint64_t>(attempt)));
        std::vector<std::uint8_t> occluder(static_cast<std::size_t>(h) * w, 0);
        std::vector<std::array<double, 2>> rect_origin;
        Sample out = sample;

        double fraction = 0.0;
        for (int rect = 0; rect < 64 && fraction < lo; ++rect) {
            const int rh = std::max(2, static_cast<int>(bh * rng.uniform(0.18, 0.40)));
            const int rw = std::max(2, static_cast<int>(bw * rng.uniform(0.18, 0.40)));
            const int rr = static_cast<int>(rng.uniform_int(r0 - rh / 2, r1 - rh / 2));
            const int rc = static_cast<int>(rng.uniform_int(c0 - rw / 2, c1 - rw / 2));

            FaceTexture tex;
            tex.color_a = hsv_to_rgb(rng.uniform(), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.9));
            tex.color_b = hsv_to_rgb(rng.uniform(), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.9));
            tex.freq_u = rng.uniform(1.0, 6.0);
            tex.freq_v = rng.uniform(0.0, 6.0);
            tex.phase = rng.uniform(0.0, 2.0 * kPi);

            for (int r = std::max(0, rr); r < std::min(h, rr + rh); ++r) {
                for (int c = std::max(0, rc); c < std::min(w, rc + rw); ++c) {
                    const std::size_t p = static_cast<std::size_t>(r) * w + c;
                    occluder[p] = 1;
                    const Eigen::Vector3d rgb = texture_color(
                        tex, static_cast<double>(c - rc) / rw, static_cast<double>(r - rr) / rh);
                    for (int ch = 0; ch < 3; ++ch) out.image.at(ch, r, c) = std::clamp(rgb[ch], 0.0, 1.0);
                }
            }
            (void)rect_origin;

            std::int64_t covered = 0;
            for (std::size_t p = 0; p < occluder.size(); ++p)
                if (occluder[p] && sample.object_mask[p]) covered += 1;
            fraction = static_cast<double>(covered) / static_cast<double>(object_px);
        }

        if (fraction >= lo && fraction <= hi) {
            for (std::size_t p = 0; p < occluder.size(); ++p)
                if (occluder[p]) out.object_mask[p] = 0;
            out.occlusion = occlusion_level_name(level);
            out.occluded_fraction = fraction;
            return out;
        }
    }
    throw GenerationError("could not reach the occlusion range in 100 attempts");
}

std::vector<std::vector<int>> split_classes(int num_classes, const std::string& split_spec,
                                            std::uint64_t seed) {
    require(num_classes >= 1, "num_classes must be >= 1");
    int base = 0, inc = 0;
    if (std::sscanf(split_spec.c_str(), "B%d+%d", &base, &inc) != 2 || base < 0 || inc <= 0)
        throw InvalidArgument("bad split spec (expected B<base>+<inc>): " + split_spec);
    if (base > num_classes || (num_classes - base) % inc != 0)
        throw InvalidArgument("split spec " + split_spec + " does not cover " +
                              std::to_string(num_classes) + " classes");

    std::vector<int> ids(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < num_classes; ++i) ids[static_cast<std::size_t>(i)] = i;
    Rng rng(seed_combine(seed, 0x53504c54ULL));
    rng.shuffle(ids);

    std::vector<std::vector<int>> tasks;
    std::size_t off = 0;
    if (base > 0) {
        tasks.emplace_back(ids.begin(), ids.begin() + base);
        off = static_cast<std::size_t>(base);
    }
    while (off < ids.size()) {
        tasks.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(off),
                           ids.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(inc)));
        off += static_cast<std::size_t>(inc);
    }
    return tasks;
}

DatasetPlan build_task_sequence(int num_classes, const std::string& split_spec, int per_class_train,
                                int per_class_test, std::uint64_t seed, double distance,
                                bool biased_azimuth) {
    require(per_class_train >= 1 && per_class_test >= 0, "per-class sample counts invalid");
    DatasetPlan plan;
    plan.tasks = split_classes(num_classes, split_spec, seed);

    std::int64_t next_id = 0;
    for (int c = 0; c < num_classes; ++c) {
        Rng rng(seed_combine(seed, 0x504f5345ULL + static_cast<std::uint64_t>(c)));
        const double bias_center = rng.uniform(0.0, 2.0 * kPi);
        const auto draw_pose = [&]() {
            Pose p;
            p.azimuth = biased_azimuth ? bias_center + rng.uniform(-kPi / 4.0, kPi / 4.0)
                                       : rng.uniform(0.0, 2.0 * kPi);
            p.elevation = rng.uniform(-kPi / 3.0, kPi / 3.0);
            p.roll = rng.uniform(-kPi / 6.0, kPi / 6.0);
            p.distance = distance;
            return p.canonicalized();
        };
        for (int i = 0; i < per_class_train; ++i)
            plan.samples.push_back({next_id++, c, draw_pose(), true});
        for (int i = 0; i < per_class_test; ++i)
            plan.samples.push_back({next_id++, c, draw_pose(), false});
    }
    return plan;
}

}  // namespace incmesh
