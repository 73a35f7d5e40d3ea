#include "incmesh/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "incmesh/error.hpp"

namespace incmesh {

namespace {

constexpr double kZNear = 1e-9;

double wrap_angle(double a) {
    const double two_pi = 2.0 * kPi;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    // fmod can land exactly on 2pi after the correction
    if (r >= two_pi) r = 0.0;
    return r;
}

// Distinct surface lattice points for per-axis subdivision counts (n+1 grid
// lines per axis): all volume lattice points minus the interior ones.
std::int64_t surface_count(int na, int nb, int nc) {
    const auto total = static_cast<std::int64_t>(na + 1) * (nb + 1) * (nc + 1);
    const auto interior = static_cast<std::int64_t>(std::max(na - 1, 0)) * std::max(nb - 1, 0) *
                          std::max(nc - 1, 0);
    return total - interior;
}

}  // namespace

CuboidMesh build_cuboid(const Vec3& dims, int target_vertices) {
    for (int a = 0; a < 3; ++a)
        if (!(dims[a] > 0.0)) throw InvalidArgument("cuboid extent must be positive");
    require(target_vertices >= 8, "target_vertices must be >= 8");

    // Ideal uniform spacing from count(h) ~ target, then a local search over
    // per-axis subdivisions around it. The spacing-ratio cap keeps the grid
    // near-uniform so per-face density stays proportional to face area.
    double h_lo = dims.minCoeff() * 1e-3;
    double h_hi = dims.maxCoeff();
    for (int it = 0; it < 80; ++it) {
        const double h = 0.5 * (h_lo + h_hi);
        int n[3];
        for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::llround(dims[a] / h)));
        if (surface_count(n[0], n[1], n[2]) > target_vertices)
            h_lo = h;
        else
            h_hi = h;
    }
    const double h_star = 0.5 * (h_lo + h_hi);
    int base[3];
    for (int a = 0; a < 3; ++a) base[a] = std::max(1, static_cast<int>(std::llround(dims[a] / h_star)));

    int best[3] = {base[0], base[1], base[2]};
    std::int64_t best_err = std::numeric_limits<std::int64_t>::max();
    double best_ratio = std::numeric_limits<double>::max();
    for (int da = -3; da <= 3; ++da) {
        for (int db = -3; db <= 3; ++db) {
            for (int dc = -3; dc <= 3; ++dc) {
                const int na = base[0] + da, nb = base[1] + db, nc = base[2] + dc;
                if (na < 1 || nb < 1 || nc < 1) continue;
                const double sp[3] = {dims[0] / na, dims[1] / nb, dims[2] / nc};
                const double ratio = *std::max_element(sp, sp + 3) / *std::min_element(sp, sp + 3);
                if (ratio > 3.0) continue;
                const std::int64_t err = std::llabs(surface_count(na, nb, nc) - target_vertices);
                if (err < best_err || (err == best_err && ratio < best_ratio)) {
                    best_err = err;
                    best_ratio = ratio;
                    best[0] = na;
                    best[1] = nb;
                    best[2] = nc;
                }
            }
        }
    }
    const int na = best[0], nb = best[1], nc = best[2];

    CuboidMesh mesh;
    mesh.dims = dims;

    // Lattice index -> vertex id, surface points only. Boundary coordinates
    // are written as exact +-dims/2.
    const auto lat = [&](int i, int j, int k) {
        return (static_cast<std::int64_t>(k) * (nb + 1) + j) * (na + 1) + i;
    };
    std::vector<int> vid(static_cast<std::size_t>(lat(na, nb, nc)) + 1, -1);
    const auto coord = [](int i, int n, double d) {
        if (i == 0) return -0.5 * d;
        if (i == n) return 0.5 * d;
        return -0.5 * d + (d * i) / n;
    };
    for (int k = 0; k <= nc; ++k) {
        for (int j = 0; j <= nb; ++j) {
            for (int i = 0; i <= na; ++i) {
                const bool on_surface = i == 0 || i == na || j == 0 || j == nb || k == 0 || k == nc;
                if (!on_surface) continue;
                vid[static_cast<std::size_t>(lat(i, j, k))] = mesh.vertex_count();
                mesh.vertices.emplace_back(coord(i, na, dims[0]), coord(j, nb, dims[1]),
                                           coord(k, nc, dims[2]));
            }
        }
    }

    // Triangulate each cuboid side with outward winding. (axis, positive)
    // selects the side; (u_axis, v_axis) span its grid.
    const auto emit_side = [&](int axis, bool positive) {
        const int u_axis = (axis + 1) % 3;
        const int v_axis = (axis + 2) % 3;
        const int n_axis[3] = {na, nb, nc};
        const int nu = n_axis[u_axis], nv = n_axis[v_axis];
        const int w = positive ? n_axis[axis] : 0;
        const auto at = [&](int u, int v) {
            int ijk[3];
            ijk[axis] = w;
            ijk[u_axis] = u;
            ijk[v_axis] = v;
            return vid[static_cast<std::size_t>(lat(ijk[0], ijk[1], ijk[2]))];
        };
        for (int v = 0; v < nv; ++v) {
            for (int u = 0; u < nu; ++u) {
                const int p00 = at(u, v), p10 = at(u + 1, v);
                const int p11 = at(u + 1, v + 1), p01 = at(u, v + 1);
                if (positive) {
                    mesh.faces.push_back({p00, p10, p11});
                    mesh.faces.push_back({p00, p11, p01});
                } else {
                    mesh.faces.push_back({p00, p11, p10});
                    mesh.faces.push_back({p00, p01, p11});
                }
            }
        }
    };
    for (int axis = 0; axis < 3; ++axis) {
        emit_side(axis, true);
        emit_side(axis, false);
    }
    return mesh;
}

Pose Pose::canonicalized() const {
    if (!(distance > 0.0)) throw InvalidArgument("pose distance must be positive");
    Pose p = *this;
    p.azimuth = wrap_angle(azimuth);
    p.roll = wrap_angle(roll);
    p.elevation = std::clamp(elevation, -0.5 * kPi, 0.5 * kPi);
    return p;
}

Vec3 camera_position(const Pose& pose) {
    const double ce = std::cos(pose.elevation);
    return pose.distance *
           Vec3(std::sin(pose.azimuth) * ce, std::sin(pose.elevation), std::cos(pose.azimuth) * ce);
}

Mat3 pose_to_rotation(const Pose& pose) {
    const Vec3 center = camera_position(pose);
    const Vec3 forward = (-center).normalized();
    // Horizontal right vector from the azimuth alone; well-defined at the poles.
    const Vec3 right0(std::cos(pose.azimuth), 0.0, -std::sin(pose.azimuth));
    const Vec3 down0 = forward.cross(right0);
    const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);
    Mat3 r;
    r.row(0) = (cr * right0 + sr * down0).transpose();
    r.row(1) = (-sr * right0 + cr * down0).transpose();
    r.row(2) = forward.transpose();
    return r;
}

Camera Camera::at_stride(int s) const {
    require(s >= 1, "stride must be >= 1");
    Camera c = *this;
    c.viewport = viewport / s;
    c.width = width / s;
    c.height = height / s;
    return c;
}

FaceRaster rasterize_faces(const CuboidMesh& mesh, const Pose& pose, const Camera& camera) {
    require(camera.focal > 0.0 && camera.viewport > 0.0, "camera focal/viewport must be positive");
    require(camera.width >= 8 && camera.height >= 8, "camera output dims must be >= 8");
    const Pose p = pose.canonicalized();

    const Mat3 rot = pose_to_rotation(p);
    const Vec3 center = camera_position(p);
    const int k_verts = mesh.vertex_count();

    FaceRaster fr;
    fr.width = camera.width;
    fr.height = camera.height;
    fr.hits.assign(static_cast<std::size_t>(fr.width) * fr.height, SurfaceHit{});
    fr.projected.assign(static_cast<std::size_t>(k_verts), Eigen::Vector2d::Zero());
    fr.vertex_depth.assign(static_cast<std::size_t>(k_verts), 0.0);
    fr.vertex_in_front.assign(static_cast<std::size_t>(k_verts), 0);

    const double cx = 0.5 * camera.width;
    const double cy = 0.5 * camera.height;
    const double scale = camera.viewport * camera.focal;

    bool any_in_front = false;
    for (int k = 0; k < k_verts; ++k) {
        const Vec3 cam = rot * (mesh.vertices[static_cast<std::size_t>(k)] - center);
        fr.vertex_depth[static_cast<std::size_t>(k)] = cam.z();
        if (cam.z() > kZNear) {
            fr.vertex_in_front[static_cast<std::size_t>(k)] = 1;
            any_in_front = true;
            fr.projected[static_cast<std::size_t>(k)] =
                Eigen::Vector2d(cx + scale * cam.x() / cam.z(), cy + scale * cam.y() / cam.z());
        }
    }
    if (!any_in_front) throw EmptyRenderError("object entirely behind camera");

    for (std::int32_t f = 0; f < mesh.face_count(); ++f) {
        const auto& tri = mesh.faces[static_cast<std::size_t>(f)];
        // No near-plane clipping; a face straddling the camera plane is skipped.
        if (!fr.vertex_in_front[static_cast<std::size_t>(tri[0])] ||
            !fr.vertex_in_front[static_cast<std::size_t>(tri[1])] ||
            !fr.vertex_in_front[static_cast<std::size_t>(tri[2])])
            continue;
        const Eigen::Vector2d& a = fr.projected[static_cast<std::size_t>(tri[0])];
        const Eigen::Vector2d& b = fr.projected[static_cast<std::size_t>(tri[1])];
        const Eigen::Vector2d& c = fr.projected[static_cast<std::size_t>(tri[2])];
        const double za = fr.vertex_depth[static_cast<std::size_t>(tri[0])];
        const double zb = fr.vertex_depth[static_cast<std::size_t>(tri[1])];
        const double zc = fr.vertex_depth[static_cast<std::size_t>(tri[2])];

        const double denom = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        if (std::abs(denom) < 1e-18) continue;

        const int col_lo = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
        const int col_hi =
            std::min(fr.width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
        const int row_lo = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
        const int row_hi =
            std::min(fr.height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));

        for (int row = row_lo; row <= row_hi; ++row) {
            const double py = row + 0.5;
            for (int col = col_lo; col <= col_hi; ++col) {
                const double px = col + 0.5;
                const double w1 = ((px - a.x()) * (c.y() - a.y()) - (py - a.y()) * (c.x() - a.x())) / denom;
                const double w2 = ((b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x())) / denom;
                const double w0 = 1.0 - w1 - w2;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                // 1/z is affine over the face in screen space, so this depth
                // equals the exact ray-face intersection depth.
                const double inv_z = w0 / za + w1 / zb + w2 / zc;
                if (!(inv_z > 0.0)) continue;
                const double depth = 1.0 / inv_z;
                SurfaceHit& hit = fr.hits[static_cast<std::size_t>(fr.index(row, col))];
                if (depth < hit.depth) {  // ties keep the lower face index
                    hit.face = f;
                    hit.depth = depth;
                    hit.bary[0] = w0;
                    hit.bary[1] = w1;
                    hit.bary[2] = w2;
                }
            }
        }
    }
    return fr;
}

RenderResult rasterize(const CuboidMesh& mesh, const Pose& pose, const Camera& camera) {
    const FaceRaster fr = rasterize_faces(mesh, pose, camera);
    const int k_verts = mesh.vertex_count();

    RenderResult rr;
    rr.width = fr.width;
    rr.height = fr.height;
    const std::size_t n_px = static_cast<std::size_t>(fr.width) * fr.height;
    rr.pixel_of_vertex.assign(static_cast<std::size_t>(k_verts), PixelCoord{});
    rr.visible.assign(static_cast<std::size_t>(k_verts), 0);
    rr.vertex_of_pixel.assign(n_px, RenderResult::kBackground);
    rr.zbuffer.assign(n_px, std::numeric_limits<double>::infinity());
    rr.object_mask.assign(n_px, 0);

    for (std::size_t p = 0; p < n_px; ++p) {
        if (fr.hits[p].face >= 0) {
            rr.object_mask[p] = 1;
            rr.zbuffer[p] = fr.hits[p].depth;
        }
    }

    std::vector<std::vector<std::int32_t>> incident(static_cast<std::size_t>(k_verts));
    for (std::int32_t f = 0; f < mesh.face_count(); ++f)
        for (const int v : mesh.faces[static_cast<std::size_t>(f)])
            incident[static_cast<std::size_t>(v)].push_back(f);

    // A vertex is visible iff the winning face at its pixel is incident to it.
    std::vector<double> best_d2(n_px, std::numeric_limits<double>::infinity());
    for (int k = 0; k < k_verts; ++k) {
        if (!fr.vertex_in_front[static_cast<std::size_t>(k)]) continue;
        const Eigen::Vector2d& uv = fr.projected[static_cast<std::size_t>(k)];
        const int col = static_cast<int>(std::floor(uv.x()));
        const int row = static_cast<int>(std::floor(uv.y()));
        if (col < 0 || col >= fr.width || row < 0 || row >= fr.height) continue;
        auto& pc = rr.pixel_of_vertex[static_cast<std::size_t>(k)];
        pc = PixelCoord{row, col, true};
        const std::size_t p = static_cast<std::size_t>(fr.index(row, col));
        const std::int32_t winner = fr.hits[p].face;
        if (winner < 0) continue;
        const auto& inc = incident[static_cast<std::size_t>(k)];
        if (std::find(inc.begin(), inc.end(), winner) == inc.end()) continue;
        rr.visible[static_cast<std::size_t>(k)] = 1;
        // Pixel keeps the visible vertex projecting closest to its center.
        const double dx = uv.x() - (col + 0.5), dy = uv.y() - (row + 0.5);
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2[p]) {
            best_d2[p] = d2;
            rr.vertex_of_pixel[p] = k;
        }
    }
    return rr;
}

std::vector<std::vector<int>> vertex_neighborhood(const CuboidMesh& mesh, double radius) {
    require(radius >= 0.0, "neighborhood radius must be >= 0");
    const int k_verts = mesh.vertex_count();
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(k_verts));
    const double r2 = radius * radius;
    for (int i = 0; i < k_verts; ++i) {
        for (int j = i + 1; j < k_verts; ++j) {
            const double d2 =
                (mesh.vertices[static_cast<std::size_t>(i)] - mesh.vertices[static_cast<std::size_t>(j)])
                    .squaredNorm();
            if (d2 < r2) {
                nbrs[static_cast<std::size_t>(i)].push_back(j);
                nbrs[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    return nbrs;
}

std::vector<Pose> template_pose_grid(int count, double distance) {
    require(count >= 1, "template count must be >= 1");
    require(distance > 0.0, "template distance must be positive");

    // Factor count into azimuth x elevation x roll sizes closest (in log
    // space) to the 12:4:3 reference shape.
    int best[3] = {count, 1, 1};
    double best_cost = std::numeric_limits<double>::max();
    const double t = std::cbrt(count / 144.0);
    const double ref[3] = {12.0 * t, 4.0 * t, 3.0 * t};
    for (int na = 1; na <= count; ++na) {
        if (count % na != 0) continue;
        const int rest = count / na;
        for (int ne = 1; ne <= rest; ++ne) {
            if (rest % ne != 0) continue;
            const int nr = rest / ne;
            const int dims[3] = {na, ne, nr};
            double cost = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double d = std::log(dims[i] / ref[i]);
                cost += d * d;
            }
            if (cost < best_cost) {
                best_cost = cost;
                best[0] = na;
                best[1] = ne;
                best[2] = nr;
            }
        }
    }
    const int na = best[0], ne = best[1], nr = best[2];

    const auto linspace = [](int n, double lo, double hi) {
        std::vector<double> v(static_cast<std::size_t>(n));
        if (n == 1) {
            v[0] = 0.0;
        } else {
            for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
        }
        return v;
    };
    const auto elevs = linspace(ne, -kPi / 3.0, kPi / 3.0);
    const auto rolls = linspace(nr, -kPi / 6.0, kPi / 6.0);

    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(count));
    for (int ia = 0; ia < na; ++ia) {
        for (const double e : elevs) {
            for (const double r : rolls) {
                Pose p;
                p.azimuth = 2.0 * kPi * ia / na;
                p.elevation = e;
                p.roll = r;
                p.distance = distance;
                poses.push_back(p.canonicalized());
            }
        }
    }
    return poses;
}

double rotation_error(const Mat3& r_pred, const Mat3& r_gt) {
    const auto check = [](const Mat3& r) {
        if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-6)
            throw InvalidArgument("rotation_error: input is not a rotation matrix");
    };
    check(r_pred);
    check(r_gt);
    const double tr = (r_pred.transpose() * r_gt).trace();
    return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
}

void write_mesh_text(std::ostream& out, const CuboidMesh& mesh) {
    out << "cuboid " << mesh.vertex_count() << ' ' << mesh.face_count() << ' ' << std::fixed
        << std::setprecision(3) << mesh.dims[0] << ' ' << mesh.dims[1] << ' ' << mesh.dims[2] << '\n';
    for (const auto& v : mesh.vertices)
        out << std::fixed << std::setprecision(3) << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& f : mesh.faces) out << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

CuboidMesh read_mesh_text(std::istream& in) {
    std::string tag;
    int n_verts = 0, n_faces = 0;
    CuboidMesh mesh;
    if (!(in >> tag >> n_verts >> n_faces >> mesh.dims[0] >> mesh.dims[1] >> mesh.dims[2]) ||
        tag != "cuboid")
        throw IoError("mesh text: bad header");
    if (n_verts < 0 || n_faces < 0) throw IoError("mesh text: negative counts");
    mesh.vertices.resize(static_cast<std::size_t>(n_verts));
    for (auto& v : mesh.vertices)
        if (!(in >> v[0] >> v[1] >> v[2])) throw IoError("mesh text: truncated vertices");
    mesh.faces.resize(static_cast<std::size_t>(n_faces));
    for (auto& f : mesh.faces) {
        if (!(in >> f[0] >> f[1] >> f[2])) throw IoError("mesh text: truncated faces");
        for (const int idx : f)
            if (idx < 0 || idx >= n_verts) throw IoError("mesh text: face index out of range");
    }
    return mesh;
}

}  // namespace incmesh
