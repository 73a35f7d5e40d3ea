#pragma once
#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace incmesh {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

// Axis-aligned cuboid centered at the origin, vertices on a regular surface
// grid, triangulated faces with outward winding.
struct CuboidMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    Vec3 dims = Vec3::Zero();

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }
    double diagonal() const { return dims.norm(); }
};

// Surface grid whose total vertex count approximates target_vertices; grid
// density is (near-)uniform so per-face counts track face area.
CuboidMesh build_cuboid(const Vec3& dims, int target_vertices);

// Camera orbit pose: azimuth about the world up axis (+y), elevation toward
// the pole, roll about the viewing axis, distance from the origin.
struct Pose {
    double azimuth = 0.0;    // [0, 2pi)
    double elevation = 0.0;  // [-pi/2, pi/2]
    double roll = 0.0;       // [0, 2pi)
    double distance = 5.0;   // > 0

    Pose canonicalized() const;
};

// Camera-from-world rotation. The basis is derived azimuth -> elevation ->
// roll: the camera is placed on the orbit sphere, aimed at the origin with
// the world up axis fixing the horizon, then rolled about the viewing axis.
// Row 0 = image right, row 1 = image down, row 2 = viewing direction.
Mat3 pose_to_rotation(const Pose& pose);

// World-space camera center for the pose.
Vec3 camera_position(const Pose& pose);

// Pinhole camera. Continuous image coordinates live in [0,W)x[0,H) with
// pixel (row,col) covering [col,col+1)x[row,row+1); samples are taken at
// pixel centers. u = W/2 + viewport*focal*x/z.
struct Camera {
    double focal = 1.0;
    double viewport = 200.0;
    int width = 64;
    int height = 64;

    // Same view at 1/s resolution; projections divide exactly by s.
    Camera at_stride(int s) const;
};

struct PixelCoord {
    int row = -1;
    int col = -1;
    bool valid = false;
};

// Nearest-face hit for one pixel (pixel-center sample).
struct SurfaceHit {
    std::int32_t face = -1;
    double depth = std::numeric_limits<double>::infinity();
    double bary[3] = {0.0, 0.0, 0.0};
};

// Low-level scan output shared by the visibility pass and the texture
// renderer in benchgen.
struct FaceRaster {
    int width = 0;
    int height = 0;
    std::vector<SurfaceHit> hits;                 // height*width
    std::vector<Eigen::Vector2d> projected;       // continuous (u,v) per vertex
    std::vector<double> vertex_depth;             // camera z per vertex
    std::vector<std::uint8_t> vertex_in_front;    // z > znear

    int index(int row, int col) const { return row * width + col; }
};

FaceRaster rasterize_faces(const CuboidMesh& mesh, const Pose& pose, const Camera& camera);

struct RenderResult {
    static constexpr std::int32_t kBackground = -1;

    int width = 0;
    int height = 0;
    std::vector<PixelCoord> pixel_of_vertex;
    std::vector<std::uint8_t> visible;
    std::vector<std::int32_t> vertex_of_pixel;  // kBackground where none
    std::vector<double> zbuffer;                // +inf off the object mask
    std::vector<std::uint8_t> object_mask;

    int index(int row, int col) const { return row * width + col; }
};

// Perspective-projects all faces, z-buffers by nearest face (ties to the
// lowest face index), and marks a vertex visible iff one of its incident
// faces wins the z-test at the vertex pixel. Throws EmptyRenderError when
// the object is entirely behind the camera.
RenderResult rasterize(const CuboidMesh& mesh, const Pose& pose, const Camera& camera);

// N^k = { i != k : ||v_i - v_k|| < radius }, symmetric, strict inequality.
std::vector<std::vector<int>> vertex_neighborhood(const CuboidMesh& mesh, double radius);

// Deterministic viewing-angle grid factored azimuth x elevation x roll
// (144 -> 12x4x3). Elevations span [-pi/3, pi/3], rolls [-pi/6, pi/6].
std::vector<Pose> template_pose_grid(int count, double distance = 5.0);

// Geodesic angle between rotations in [0, pi]; arccos form with the trace
// argument clamped. Inputs are validated as rotation matrices.
double rotation_error(const Mat3& r_pred, const Mat3& r_gt);

// Plain-text mesh format: "cuboid <V> <F> <dx> <dy> <dz>" header, then one
// vertex per line (fixed 3 decimals) and one face per line (3 indices).
void write_mesh_text(std::ostream& out, const CuboidMesh& mesh);
CuboidMesh read_mesh_text(std::istream& in);

}  // namespace incmesh
