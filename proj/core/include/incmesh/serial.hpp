#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "incmesh/error.hpp"

// Raw little-endian binary primitives for checkpoints and raster files.
// Doubles are stored bit-exactly so save/load round-trips are byte-identical.
namespace incmesh::serial {

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated binary stream");
    return v;
}

inline void write_i32(std::ostream& out, std::int32_t v) { write_pod(out, v); }
inline void write_i64(std::ostream& out, std::int64_t v) { write_pod(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_pod(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_pod(out, v); }
inline void write_f64(std::ostream& out, double v) { write_pod(out, v); }
inline std::int32_t read_i32(std::istream& in) { return read_pod<std::int32_t>(in); }
inline std::int64_t read_i64(std::istream& in) { return read_pod<std::int64_t>(in); }
inline std::uint32_t read_u32(std::istream& in) { return read_pod<std::uint32_t>(in); }
inline std::uint64_t read_u64(std::istream& in) { return read_pod<std::uint64_t>(in); }
inline double read_f64(std::istream& in) { return read_pod<double>(in); }

inline void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw IoError("truncated binary stream");
    return s;
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_i64(out, m.rows());
    write_i64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    const auto rows = read_i64(in);
    const auto cols = read_i64(in);
    if (rows < 0 || cols < 0) throw IoError("bad matrix dims");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("truncated binary stream");
    return m;
}

inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    write_i64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}

inline Eigen::VectorXd read_vector(std::istream& in) {
    const auto n = read_i64(in);
    if (n < 0) throw IoError("bad vector size");
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
    if (!in) throw IoError("truncated binary stream");
    return v;
}

inline void write_i32_vec(std::ostream& out, const std::vector<std::int32_t>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(std::int32_t) * v.size()));
}

inline std::vector<std::int32_t> read_i32_vec(std::istream& in) {
    const auto n = read_u64(in);
    std::vector<std::int32_t> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(std::int32_t) * v.size()));
    if (!in) throw IoError("truncated binary stream");
    return v;
}

inline void write_i64_vec(std::ostream& out, const std::vector<std::int64_t>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(std::int64_t) * v.size()));
}

inline std::vector<std::int64_t> read_i64_vec(std::istream& in) {
    const auto n = read_u64(in);
    std::vector<std::int64_t> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(std::int64_t) * v.size()));
    if (!in) throw IoError("truncated binary stream");
    return v;
}

}  // namespace incmesh::serial
