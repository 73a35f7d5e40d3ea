#pragma once
#include <cstdint>
#include <vector>

#include "incmesh/error.hpp"

namespace incmesh {

// RGB image, values in [0,1], channel-major storage [c][row][col].
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    static constexpr int kChannels = 3;

    Image() = default;
    Image(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(kChannels) * r * c, 0.0) {}

    double& at(int ch, int r, int c) {
        return data[(static_cast<std::size_t>(ch) * rows + r) * cols + c];
    }
    double at(int ch, int r, int c) const {
        return data[(static_cast<std::size_t>(ch) * rows + r) * cols + c];
    }

    void validate() const {
        require(rows > 0 && cols > 0, "image dims must be positive");
        require(data.size() == static_cast<std::size_t>(kChannels) * rows * cols,
                "image buffer size mismatch");
        for (const double v : data)
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image values must be finite in [0,1]");
    }
};

}  // namespace incmesh
