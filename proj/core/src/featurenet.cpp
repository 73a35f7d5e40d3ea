#include "incmesh/featurenet.hpp"

#include <cmath>

#include "incmesh/error.hpp"
#include "incmesh/rng.hpp"

namespace incmesh {

namespace {

constexpr double kNormGuard = 1e-12;

struct LayerPlan {
    int h_in, w_in;     // unpadded input
    int h_pad, w_pad;   // after asymmetric zero padding
    int pad_top, pad_left;
    int h_out, w_out;
};

// Padding totals k - s per side pair, which makes out = in / s exact for
// stride-divisible inputs.
LayerPlan plan_layer(const ConvSpec& spec, int h_in, int w_in) {
    const int total = spec.ksize - spec.stride;
    require(total >= 0, "kernel must be at least as large as stride");
    LayerPlan p{};
    p.h_in = h_in;
    p.w_in = w_in;
    p.pad_top = total / 2;
    p.pad_left = total / 2;
    p.h_pad = h_in + total;
    p.w_pad = w_in + total;
    p.h_out = (p.h_pad - spec.ksize) / spec.stride + 1;
    p.w_out = (p.w_pad - spec.ksize) / spec.stride + 1;
    return p;
}

void im2col(const Eigen::MatrixXd& padded, const LayerPlan& p, const ConvSpec& spec,
            Eigen::MatrixXd& col) {
    const int k = spec.ksize, s = spec.stride, ch = spec.in_ch;
    col.resize(static_cast<Eigen::Index>(ch) * k * k, static_cast<Eigen::Index>(p.h_out) * p.w_out);
    for (int oy = 0; oy < p.h_out; ++oy) {
        for (int ox = 0; ox < p.w_out; ++ox) {
            const Eigen::Index out_col = static_cast<Eigen::Index>(oy) * p.w_out + ox;
            for (int c = 0; c < ch; ++c) {
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * s + ky;
                    const Eigen::Index row0 = (static_cast<Eigen::Index>(c) * k + ky) * k;
                    const Eigen::Index in0 = static_cast<Eigen::Index>(iy) * p.w_pad + ox * s;
                    for (int kx = 0; kx < k; ++kx)
                        col(row0 + kx, out_col) = padded(c, in0 + kx);
                }
            }
        }
    }
}

void col2im_add(const Eigen::MatrixXd& dcol, const LayerPlan& p, const ConvSpec& spec,
                Eigen::MatrixXd& dpadded) {
    const int k = spec.ksize, s = spec.stride, ch = spec.in_ch;
    dpadded.setZero(ch, static_cast<Eigen::Index>(p.h_pad) * p.w_pad);
    for (int oy = 0; oy < p.h_out; ++oy) {
        for (int ox = 0; ox < p.w_out; ++ox) {
            const Eigen::Index out_col = static_cast<Eigen::Index>(oy) * p.w_out + ox;
            for (int c = 0; c < ch; ++c) {
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * s + ky;
                    const Eigen::Index row0 = (static_cast<Eigen::Index>(c) * k + ky) * k;
                    const Eigen::Index in0 = static_cast<Eigen::Index>(iy) * p.w_pad + ox * s;
                    for (int kx = 0; kx < k; ++kx)
                        dpadded(c, in0 + kx) += dcol(row0 + kx, out_col);
                }
            }
        }
    }
}

Eigen::MatrixXd pad_activation(const Eigen::MatrixXd& act, int h_in, int w_in, const LayerPlan& p) {
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(act.rows(), static_cast<Eigen::Index>(p.h_pad) * p.w_pad);
    for (int r = 0; r < h_in; ++r)
        padded.block(0, static_cast<Eigen::Index>(r + p.pad_top) * p.w_pad + p.pad_left, act.rows(), w_in) =
            act.block(0, static_cast<Eigen::Index>(r) * w_in, act.rows(), w_in);
    return padded;
}

Eigen::MatrixXd crop_gradient(const Eigen::MatrixXd& dpadded, int h_in, int w_in, const LayerPlan& p) {
    Eigen::MatrixXd d(dpadded.rows(), static_cast<Eigen::Index>(h_in) * w_in);
    for (int r = 0; r < h_in; ++r)
        d.block(0, static_cast<Eigen::Index>(r) * w_in, d.rows(), w_in) = dpadded.block(
            0, static_cast<Eigen::Index>(r + p.pad_top) * p.w_pad + p.pad_left, d.rows(), w_in);
    return d;
}

// Image (padded up to a stride multiple) as a channels x pixels matrix.
Eigen::MatrixXd image_to_matrix(const Image& image, int stride) {
    image.validate();
    if (image.rows < stride || image.cols < stride)
        throw InvalidArgument("image smaller than the extractor stride");
    const int h = (image.rows + stride - 1) / stride * stride;
    const int w = (image.cols + stride - 1) / stride * stride;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Image::kChannels, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < Image::kChannels; ++c)
        for (int r = 0; r < image.rows; ++r)
            for (int col = 0; col < image.cols; ++col)
                m(c, static_cast<Eigen::Index>(r) * w + col) = image.at(c, r, col);
    return m;
}

struct ForwardCache {
    std::vector<LayerPlan> plans;
    std::vector<Eigen::MatrixXd> padded;  // per layer input, padded
    std::vector<Eigen::MatrixXd> cols;
    std::vector<Eigen::MatrixXd> acts;    // post-tanh
    Eigen::VectorXd prenorm_norms;
    int h = 0, w = 0;                     // output dims
};

struct ParamView {
    Eigen::Map<const Eigen::MatrixXd> w;
    Eigen::Map<const Eigen::VectorXd> b;
};

ParamView layer_params(const ArchDescriptor& arch, const Eigen::VectorXd& params, int layer) {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l) {
        const auto& s = arch.layers[static_cast<std::size_t>(l)];
        off += static_cast<std::size_t>(s.out_ch) * s.in_ch * s.ksize * s.ksize +
               static_cast<std::size_t>(s.out_ch);
    }
    const auto& s = arch.layers[static_cast<std::size_t>(layer)];
    const auto w_size = static_cast<std::size_t>(s.out_ch) * s.in_ch * s.ksize * s.ksize;
    return ParamView{
        Eigen::Map<const Eigen::MatrixXd>(params.data() + off, s.out_ch,
                                          static_cast<Eigen::Index>(s.in_ch) * s.ksize * s.ksize),
        Eigen::Map<const Eigen::VectorXd>(params.data() + off + w_size, s.out_ch)};
}

ForwardCache run_layers(const ArchDescriptor& arch, const Eigen::VectorXd& params, const Image& image) {
    arch.validate();
    require(params.size() == arch.param_count(), "parameter vector size mismatch");

    ForwardCache cache;
    const int stride = arch.total_stride();
    Eigen::MatrixXd act = image_to_matrix(image, stride);
    int h = (image.rows + stride - 1) / stride * stride;
    int w = (image.cols + stride - 1) / stride * stride;

    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
        const auto& spec = arch.layers[l];
        const LayerPlan plan = plan_layer(spec, h, w);
        Eigen::MatrixXd padded = pad_activation(act, h, w, plan);
        Eigen::MatrixXd col;
        im2col(padded, plan, spec, col);
        const ParamView pv = layer_params(arch, params, static_cast<int>(l));
        act = ((pv.w * col).colwise() + pv.b).array().tanh().matrix();
        cache.plans.push_back(plan);
        cache.padded.push_back(std::move(padded));
        cache.cols.push_back(std::move(col));
        cache.acts.push_back(act);
        h = plan.h_out;
        w = plan.w_out;
    }
    cache.h = h;
    cache.w = w;
    return cache;
}

}  // namespace

int ArchDescriptor::total_stride() const {
    int s = 1;
    for (const auto& l : layers) s *= l.stride;
    return s;
}

int ArchDescriptor::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        n += static_cast<std::size_t>(l.out_ch) * l.in_ch * l.ksize * l.ksize +
             static_cast<std::size_t>(l.out_ch);
    return static_cast<int>(n);
}

void ArchDescriptor::validate() const {
    require(!layers.empty(), "architecture needs at least one layer");
    require(layers.front().in_ch == Image::kChannels, "first layer must take 3 channels");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& s = layers[l];
        require(s.in_ch > 0 && s.out_ch > 0 && s.ksize > 0 && s.stride > 0, "bad conv spec");
        require(s.ksize >= s.stride, "kernel must cover the stride");
        if (l > 0) require(s.in_ch == layers[l - 1].out_ch, "channel chain mismatch");
    }
}

ArchDescriptor ArchDescriptor::standard(int feature_dim) {
    ArchDescriptor a;
    a.layers = {{3, 16, 5, 2}, {16, 32, 3, 2}, {32, feature_dim, 3, 1}};
    return a;
}

ArchDescriptor ArchDescriptor::tiny(int feature_dim) {
    ArchDescriptor a;
    a.layers = {{3, feature_dim, 3, 1}};
    return a;
}

FeatureMap run_forward(const ArchDescriptor& arch, const Eigen::VectorXd& params, const Image& image) {
    ForwardCache cache = run_layers(arch, params, image);
    Eigen::MatrixXd& y = cache.acts.back();
    FeatureMap fm;
    fm.rows = cache.h;
    fm.cols = cache.w;
    fm.data.resize(y.rows(), y.cols());
    for (Eigen::Index p = 0; p < y.cols(); ++p) {
        const double n = y.col(p).norm();
        if (n < kNormGuard) {
            fm.data.col(p).setZero();
            fm.data(0, p) = 1.0;
        } else {
            fm.data.col(p) = y.col(p) / n;
        }
    }
    return fm;
}

FeatureExtractor::FeatureExtractor(ArchDescriptor arch, std::uint64_t seed) : arch_(std::move(arch)) {
    arch_.validate();
    params_.resize(arch_.param_count());
    Rng rng(seed_combine(seed, 0x4e455457ULL));
    Eigen::Index off = 0;
    for (const auto& l : arch_.layers) {
        const Eigen::Index w_size = static_cast<Eigen::Index>(l.out_ch) * l.in_ch * l.ksize * l.ksize;
        const double scale = std::sqrt(2.0 / (static_cast<double>(l.in_ch) * l.ksize * l.ksize));
        for (Eigen::Index i = 0; i < w_size; ++i) params_[off + i] = scale * rng.normal();
        off += w_size;
        for (int i = 0; i < l.out_ch; ++i) params_[off + i] = 0.0;
        off += l.out_ch;
    }
}

FeatureExtractor::FeatureExtractor(ArchDescriptor arch, Eigen::VectorXd params)
    : arch_(std::move(arch)), params_(std::move(params)) {
    arch_.validate();
    require(params_.size() == arch_.param_count(), "parameter vector size mismatch");
}

Eigen::VectorXd FeatureExtractor::backward(const Image& image, const Eigen::MatrixXd& grad_map) const {
    ForwardCache cache = run_layers(arch_, params_, image);
    const Eigen::MatrixXd& y = cache.acts.back();
    if (grad_map.rows() != y.rows() || grad_map.cols() != y.cols())
        throw InvalidArgument("feature gradient shape mismatch");

    // Through the normalization: d<f,g>/dy = (g - f (f.g)) / |y|.
    Eigen::MatrixXd dact(y.rows(), y.cols());
    for (Eigen::Index p = 0; p < y.cols(); ++p) {
        const double n = y.col(p).norm();
        if (n < kNormGuard) {
            dact.col(p).setZero();
            continue;
        }
        const Eigen::VectorXd f = y.col(p) / n;
        dact.col(p) = (grad_map.col(p) - f * f.dot(grad_map.col(p))) / n;
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    std::size_t tail_off = static_cast<std::size_t>(params_.size());
    for (int l = static_cast<int>(arch_.layers.size()) - 1; l >= 0; --l) {
        const auto& spec = arch_.layers[static_cast<std::size_t>(l)];
        const LayerPlan& plan = cache.plans[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd dpre =
            (dact.array() * (1.0 - cache.acts[static_cast<std::size_t>(l)].array().square())).matrix();

        const auto w_size = static_cast<std::size_t>(spec.out_ch) * spec.in_ch * spec.ksize * spec.ksize;
        tail_off -= w_size + static_cast<std::size_t>(spec.out_ch);
        Eigen::Map<Eigen::MatrixXd> dw(grad.data() + tail_off, spec.out_ch,
                                       static_cast<Eigen::Index>(spec.in_ch) * spec.ksize * spec.ksize);
        Eigen::Map<Eigen::VectorXd> db(grad.data() + tail_off + w_size, spec.out_ch);
        dw = dpre * cache.cols[static_cast<std::size_t>(l)].transpose();
        db = dpre.rowwise().sum();

        if (l > 0) {
            const ParamView pv = layer_params(arch_, params_, l);
            const Eigen::MatrixXd dcol = pv.w.transpose() * dpre;
            Eigen::MatrixXd dpadded;
            col2im_add(dcol, plan, spec, dpadded);
            dact = crop_gradient(dpadded, plan.h_in, plan.w_in, plan);
        }
    }
    return grad;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               const AdamParams& hp) {
    if (!grad.allFinite()) throw DivergenceError("non-finite gradient in optimizer step");
    require(grad.size() == params.size(), "gradient size mismatch");
    if (state.m.size() != params.size()) state.reset(params.size());
    state.t += 1;
    state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * grad;
    state.v = hp.beta2 * state.v.array().matrix() + (1.0 - hp.beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    const Eigen::ArrayXd m_hat = state.m.array() / bc1;
    const Eigen::ArrayXd v_hat = state.v.array() / bc2;
    params.array() -= lr * (m_hat / (v_hat.sqrt() + hp.eps));
    if (hp.weight_decay != 0.0) params.array() -= lr * hp.weight_decay * params.array();
}

}  // namespace incmesh
