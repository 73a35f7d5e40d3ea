#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "incmesh/image.hpp"

namespace incmesh {

struct ConvSpec {
    int in_ch = 0;
    int out_ch = 0;
    int ksize = 0;
    int stride = 1;
};

// Stack of convolution+tanh layers followed by per-pixel L2 normalization.
// Output spatial dims equal input dims divided by the total stride; inputs
// are zero-padded up to a stride multiple first.
struct ArchDescriptor {
    std::vector<ConvSpec> layers;

    int feature_dim() const { return layers.back().out_ch; }
    int total_stride() const;
    int param_count() const;
    void validate() const;

    // 5x5/s2 -> 3x3/s2 -> 3x3/s1 with widths (16, 32, d); total stride 4.
    static ArchDescriptor standard(int feature_dim);
    // Single 3x3/s1 layer straight to d channels, for small numeric tests.
    static ArchDescriptor tiny(int feature_dim);
};

// Unit-norm feature per output pixel; column p = feature at pixel
// (p / cols, p % cols).
struct FeatureMap {
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXd data;  // dim x rows*cols

    int dim() const { return static_cast<int>(data.rows()); }
    int index(int row, int col) const { return row * cols + col; }
};

FeatureMap run_forward(const ArchDescriptor& arch, const Eigen::VectorXd& params, const Image& image);

class FeatureExtractor {
public:
    FeatureExtractor(ArchDescriptor arch, std::uint64_t seed);
    FeatureExtractor(ArchDescriptor arch, Eigen::VectorXd params);

    const ArchDescriptor& arch() const { return arch_; }
    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& mutable_params() { return params_; }

    FeatureMap forward(const Image& image) const { return run_forward(arch_, params_, image); }

    // Gradient of <feature_map, grad_map> with respect to the parameters,
    // including the normalization Jacobian. Zero-norm pixels propagate zero.
    Eigen::VectorXd backward(const Image& image, const Eigen::MatrixXd& grad_map) const;

private:
    ArchDescriptor arch_;
    Eigen::VectorXd params_;
};

// Deep frozen copy for distillation targets; forward-only by construction.
class FrozenExtractor {
public:
    explicit FrozenExtractor(const FeatureExtractor& source)
        : arch_(source.arch()), params_(source.params()) {}

    const ArchDescriptor& arch() const { return arch_; }
    FeatureMap forward(const Image& image) const { return run_forward(arch_, params_, image); }

private:
    ArchDescriptor arch_;
    Eigen::VectorXd params_;
};

inline FrozenExtractor snapshot(const FeatureExtractor& extractor) {
    return FrozenExtractor(extractor);
}

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t t = 0;

    void reset(Eigen::Index n) {
        m = Eigen::VectorXd::Zero(n);
        v = Eigen::VectorXd::Zero(n);
        t = 0;
    }
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

// Bias-corrected adaptive-moment step; throws DivergenceError on a
// non-finite gradient.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               const AdamParams& hp = {});

}  // namespace incmesh
