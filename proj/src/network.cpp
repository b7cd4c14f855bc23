#include "gandetect/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gandetect/errors.hpp"
#include "gandetect/parallel.hpp"
#include "gandetect/random.hpp"

namespace gandetect {

// ----------------------------------------------------------------- config

ModelConfig ModelConfig::standard(int in_channels) {
    ModelConfig c;
    c.in_channels = in_channels;
    return c;
}

ModelConfig ModelConfig::reduced(int in_channels, int input_size, int conv_width, int dense_width) {
    ModelConfig c;
    c.in_channels = in_channels;
    c.input_size = input_size;
    c.conv_widths.fill(conv_width);
    c.dense_width = dense_width;
    return c;
}

void ModelConfig::validate() const {
    if (in_channels < 1) throw ConfigError("model needs at least one input channel");
    if (input_size < 8 || input_size % 8 != 0) {
        throw ConfigError("input side must be a positive multiple of 8, got " + std::to_string(input_size));
    }
    for (int w : conv_widths) {
        if (w < 1) throw ConfigError("convolution widths must be positive");
    }
    if (dense_width < 1) throw ConfigError("dense width must be positive");
    if (!(input_gain > 0.0) || !std::isfinite(input_gain)) throw ConfigError("input gain must be positive");
}

int ModelConfig::flatten_width() const noexcept {
    const int side = input_size / 8;
    return conv_widths.back() * side * side;
}

std::size_t ModelConfig::parameter_count() const noexcept {
    return walk_shapes(*this).parameter_count;
}

ShapeReport walk_shapes(const ModelConfig& config) {
    ShapeReport report;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<int> shape) {
        std::size_t size = 1;
        for (int d : shape) size *= static_cast<std::size_t>(d);
        report.slots.push_back({std::move(name), std::move(shape), offset, size});
        offset += size;
    };

    int channels = config.in_channels;
    int side = config.input_size;
    for (int l = 0; l < ModelConfig::kConvLayers; ++l) {
        const int k = ModelConfig::kKernelSizes[l];
        const int out = config.conv_widths[l];
        add("conv" + std::to_string(l + 1) + ".weight", {out, channels, k, k});
        add("conv" + std::to_string(l + 1) + ".bias", {out});
        channels = out;
        if (ModelConfig::pools_after(l)) side /= 2;
        report.stage_shapes.push_back({channels, side, side});
    }
    report.flatten_width = channels * side * side;
    add("dense.weight", {config.dense_width, report.flatten_width});
    add("dense.bias", {config.dense_width});
    add("output.weight", {1, config.dense_width});
    add("output.bias", {1});
    report.parameter_count = offset;
    return report;
}

// ----------------------------------------------------------------- params

template <typename T>
ModelParams<T>::ModelParams(const ModelConfig& config) : config_(config) {
    config_.validate();
    auto report = walk_shapes(config_);
    slots_ = std::move(report.slots);
    values_.assign(report.parameter_count, T(0));
    velocity_.assign(report.parameter_count, T(0));
}

template <typename T>
void ModelParams<T>::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const auto& slot : slots_) {
        auto data = std::span<T>(values_).subspan(slot.offset, slot.size);
        if (slot.shape.size() == 1) {
            std::fill(data.begin(), data.end(), T(0));
            continue;
        }
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < slot.shape.size(); ++d) fan_in *= static_cast<std::size_t>(slot.shape[d]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (T& w : data) w = static_cast<T>((2.0 * uniform_unit(rng()) - 1.0) * limit);
    }
    std::fill(velocity_.begin(), velocity_.end(), T(0));
}

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params) {
    ModelParams<To> out(params.config());
    std::transform(params.values().begin(), params.values().end(), out.values().begin(),
                   [](From v) { return static_cast<To>(v); });
    std::transform(params.velocity().begin(), params.velocity().end(), out.velocity().begin(),
                   [](From v) { return static_cast<To>(v); });
    return out;
}

// ----------------------------------------------------------------- kernels

namespace {

struct ConvGeometry {
    int in_c;
    int out_c;
    int k;
    int side;
};

// Pre-activation of a stride-1 zero-padded convolution, channels-first.
template <typename T>
void conv_forward(const T* in, const T* weight, const T* bias, const ConvGeometry& g, T* out) {
    const int s = g.side;
    const int r = g.k / 2;
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int o = 0; o < g.out_c; ++o) {
        T* out_plane = out + o * plane;
        for (int y = 0; y < s; ++y) {
            T* out_row = out_plane + static_cast<std::size_t>(y) * s;
            std::fill(out_row, out_row + s, bias[o]);
            for (int i = 0; i < g.in_c; ++i) {
                const T* in_plane = in + i * plane;
                const T* w = weight + (static_cast<std::size_t>(o) * g.in_c + i) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    const int sy = y + ky - r;
                    if (sy < 0 || sy >= s) continue;
                    const T* in_row = in_plane + static_cast<std::size_t>(sy) * s;
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int dx = kx - r;
                        const T wv = w[ky * g.k + kx];
                        const int x0 = std::max(0, -dx);
                        const int x1 = std::min(s, s - dx);
                        for (int x = x0; x < x1; ++x) out_row[x] += wv * in_row[x + dx];
                    }
                }
            }
        }
    }
}

// Accumulates weight/bias gradients and, when `din` is non-null, the input
// gradient of a convolution given the gradient of its pre-activation.
template <typename T>
void conv_backward(const T* in, const T* weight, const T* dout, const ConvGeometry& g, T* dweight, T* dbias, T* din,
                   std::vector<T>& row_acc) {
    const int s = g.side;
    const int r = g.k / 2;
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    const std::size_t taps = static_cast<std::size_t>(g.in_c) * g.k * g.k;
    row_acc.assign(taps * s, T(0));

    for (int o = 0; o < g.out_c; ++o) {
        const T* dplane = dout + o * plane;
        T bias_acc = 0;
        std::fill(row_acc.begin(), row_acc.end(), T(0));
        for (int y = 0; y < s; ++y) {
            const T* drow = dplane + static_cast<std::size_t>(y) * s;
            for (int x = 0; x < s; ++x) bias_acc += drow[x];
            for (int i = 0; i < g.in_c; ++i) {
                const T* in_plane = in + i * plane;
                const T* w = weight + (static_cast<std::size_t>(o) * g.in_c + i) * g.k * g.k;
                T* din_plane = din != nullptr ? din + i * plane : nullptr;
                for (int ky = 0; ky < g.k; ++ky) {
                    const int sy = y + ky - r;
                    if (sy < 0 || sy >= s) continue;
                    const T* in_row = in_plane + static_cast<std::size_t>(sy) * s;
                    T* din_row = din_plane != nullptr ? din_plane + static_cast<std::size_t>(sy) * s : nullptr;
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int dx = kx - r;
                        const int x0 = std::max(0, -dx);
                        const int x1 = std::min(s, s - dx);
                        T* acc = row_acc.data() + ((static_cast<std::size_t>(i) * g.k + ky) * g.k + kx) * s;
                        for (int x = x0; x < x1; ++x) acc[x] += drow[x] * in_row[x + dx];
                        if (din_row != nullptr) {
                            const T wv = w[ky * g.k + kx];
                            for (int x = x0; x < x1; ++x) din_row[x + dx] += wv * drow[x];
                        }
                    }
                }
            }
        }
        dbias[o] += bias_acc;
        T* dw = dweight + static_cast<std::size_t>(o) * taps;
        for (std::size_t t = 0; t < taps; ++t) {
            const T* acc = row_acc.data() + t * s;
            T sum = 0;
            for (int x = 0; x < s; ++x) sum += acc[x];
            dw[t] += sum;
        }
    }
}

template <typename T>
void max_pool_forward(const T* in, int channels, int side, T* out, int* argmax) {
    const int half = side / 2;
    for (int c = 0; c < channels; ++c) {
        const T* plane = in + static_cast<std::size_t>(c) * side * side;
        for (int y = 0; y < half; ++y) {
            for (int x = 0; x < half; ++x) {
                int best = (2 * y) * side + 2 * x;
                for (const int cand : {best + 1, best + side, best + side + 1}) {
                    if (plane[cand] > plane[best]) best = cand;
                }
                const std::size_t o = (static_cast<std::size_t>(c) * half + y) * half + x;
                out[o] = plane[best];
                argmax[o] = best;
            }
        }
    }
}

template <typename T>
void max_pool_backward(const T* dout, const int* argmax, int channels, int side, T* din) {
    const int half = side / 2;
    std::fill(din, din + static_cast<std::size_t>(channels) * side * side, T(0));
    for (int c = 0; c < channels; ++c) {
        T* plane = din + static_cast<std::size_t>(c) * side * side;
        for (int k = 0; k < half * half; ++k) {
            const std::size_t o = static_cast<std::size_t>(c) * half * half + k;
            plane[argmax[o]] += dout[o];
        }
    }
}

template <typename T>
T sigmoid(T z) {
    if (z >= 0) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

template <typename T>
void require_finite(const std::vector<T>& values, const std::string& layer) {
    for (const T v : values) {
        if (!std::isfinite(v)) throw NumericalError("non-finite activation in layer " + layer);
    }
}

// Slot indices inside ModelParams::slots().
constexpr std::size_t conv_weight_slot(int l) { return static_cast<std::size_t>(2 * l); }
constexpr std::size_t conv_bias_slot(int l) { return static_cast<std::size_t>(2 * l + 1); }
constexpr std::size_t kDenseWeight = 12;
constexpr std::size_t kDenseBias = 13;
constexpr std::size_t kOutputWeight = 14;
constexpr std::size_t kOutputBias = 15;

std::string conv_name(int l) { return "conv" + std::to_string(l + 1); }

// Per-item activations, reused across items handled by one lane.
template <typename T>
struct Workspace {
    std::array<ConvGeometry, ModelConfig::kConvLayers> geometry{};
    std::array<std::vector<T>, ModelConfig::kConvLayers> pre;     // conv outputs before ReLU/pool
    std::array<std::vector<T>, ModelConfig::kConvLayers> post;    // stage outputs after ReLU/pool
    std::array<std::vector<int>, ModelConfig::kConvLayers> argmax;
    std::vector<T> scaled_input;
    std::vector<T> dense_pre;
    std::vector<T> dense_post;
    T logit = 0;
    T score = 0;

    std::vector<T> grad_a;
    std::vector<T> grad_b;
    std::vector<T> row_acc;

    explicit Workspace(const ModelConfig& config) {
        int channels = config.in_channels;
        int side = config.input_size;
        for (int l = 0; l < ModelConfig::kConvLayers; ++l) {
            geometry[l] = {channels, config.conv_widths[l], ModelConfig::kKernelSizes[l], side};
            const std::size_t conv_size = static_cast<std::size_t>(config.conv_widths[l]) * side * side;
            pre[l].resize(conv_size);
            if (ModelConfig::pools_after(l)) {
                side /= 2;
                post[l].resize(static_cast<std::size_t>(config.conv_widths[l]) * side * side);
                argmax[l].resize(post[l].size());
            } else {
                post[l].resize(conv_size);
            }
            channels = config.conv_widths[l];
        }
        dense_pre.resize(static_cast<std::size_t>(config.dense_width));
        dense_post.resize(static_cast<std::size_t>(config.dense_width));
    }
};

template <typename T>
void forward_item(const ModelParams<T>& params, std::span<const T> input, Workspace<T>& ws) {
    const ModelConfig& config = params.config();
    const T* activation = input.data();
    if (config.input_gain != 1.0) {
        const auto gain = static_cast<T>(config.input_gain);
        ws.scaled_input.resize(input.size());
        std::transform(input.begin(), input.end(), ws.scaled_input.begin(), [gain](T v) { return v * gain; });
        activation = ws.scaled_input.data();
    }
    for (int l = 0; l < ModelConfig::kConvLayers; ++l) {
        const ConvGeometry& g = ws.geometry[l];
        conv_forward(activation, params.tensor(conv_weight_slot(l)).data(), params.tensor(conv_bias_slot(l)).data(), g,
                     ws.pre[l].data());
        require_finite(ws.pre[l], conv_name(l));
        if (ModelConfig::pools_after(l)) {
            max_pool_forward(ws.pre[l].data(), g.out_c, g.side, ws.post[l].data(), ws.argmax[l].data());
        } else {
            std::transform(ws.pre[l].begin(), ws.pre[l].end(), ws.post[l].begin(),
                           [](T v) { return v > T(0) ? v : T(0); });
        }
        activation = ws.post[l].data();
    }

    const auto& features = ws.post[ModelConfig::kConvLayers - 1];
    const auto dense_w = params.tensor(kDenseWeight);
    const auto dense_b = params.tensor(kDenseBias);
    const std::size_t width = features.size();
    for (int j = 0; j < config.dense_width; ++j) {
        const T* row = dense_w.data() + static_cast<std::size_t>(j) * width;
        T acc = dense_b[j];
        for (std::size_t f = 0; f < width; ++f) acc += row[f] * features[f];
        ws.dense_pre[j] = acc;
        ws.dense_post[j] = acc > T(0) ? acc : T(0);
    }
    require_finite(ws.dense_pre, "dense");

    const auto out_w = params.tensor(kOutputWeight);
    T logit = params.tensor(kOutputBias)[0];
    for (int j = 0; j < config.dense_width; ++j) logit += out_w[j] * ws.dense_post[j];
    if (!std::isfinite(logit)) throw NumericalError("non-finite activation in layer output");
    ws.logit = logit;
    ws.score = sigmoid(logit);
}

// Adds d(loss)/d(params) for one item into `grads`, given d(loss)/d(logit).
template <typename T>
void backward_item(const ModelParams<T>& params, std::span<const T> input, Workspace<T>& ws, T dlogit,
                   std::vector<T>& grads) {
    const ModelConfig& config = params.config();
    auto grad_slot = [&](std::size_t slot) { return grads.data() + params.slots()[slot].offset; };

    const auto out_w = params.tensor(kOutputWeight);
    T* g_out_w = grad_slot(kOutputWeight);
    grad_slot(kOutputBias)[0] += dlogit;
    std::vector<T> ddense(static_cast<std::size_t>(config.dense_width));
    for (int j = 0; j < config.dense_width; ++j) {
        g_out_w[j] += dlogit * ws.dense_post[j];
        ddense[j] = ws.dense_pre[j] > T(0) ? dlogit * out_w[j] : T(0);
    }

    const auto& features = ws.post[ModelConfig::kConvLayers - 1];
    const std::size_t width = features.size();
    const auto dense_w = params.tensor(kDenseWeight);
    T* g_dense_w = grad_slot(kDenseWeight);
    T* g_dense_b = grad_slot(kDenseBias);
    auto& dfeatures = ws.grad_a;
    dfeatures.assign(width, T(0));
    for (int j = 0; j < config.dense_width; ++j) {
        const T d = ddense[j];
        g_dense_b[j] += d;
        if (d == T(0)) continue;
        T* grow = g_dense_w + static_cast<std::size_t>(j) * width;
        const T* wrow = dense_w.data() + static_cast<std::size_t>(j) * width;
        for (std::size_t f = 0; f < width; ++f) {
            grow[f] += d * features[f];
            dfeatures[f] += d * wrow[f];
        }
    }

    // ws.grad_a holds d(loss)/d(stage output) for the current layer.
    for (int l = ModelConfig::kConvLayers - 1; l >= 0; --l) {
        const ConvGeometry& g = ws.geometry[l];
        auto& dpre = ws.grad_b;
        dpre.resize(ws.pre[l].size());
        if (ModelConfig::pools_after(l)) {
            max_pool_backward(ws.grad_a.data(), ws.argmax[l].data(), g.out_c, g.side, dpre.data());
        } else {
            for (std::size_t k = 0; k < dpre.size(); ++k) dpre[k] = ws.pre[l][k] > T(0) ? ws.grad_a[k] : T(0);
        }
        const T* network_in = config.input_gain != 1.0 ? ws.scaled_input.data() : input.data();
        const T* layer_in = l == 0 ? network_in : ws.post[l - 1].data();
        T* din = nullptr;
        std::vector<T> next_grad;
        if (l > 0) {
            next_grad.assign(ws.post[l - 1].size(), T(0));
            din = next_grad.data();
        }
        conv_backward(layer_in, params.tensor(conv_weight_slot(l)).data(), dpre.data(), g,
                      grad_slot(conv_weight_slot(l)), grad_slot(conv_bias_slot(l)), din, ws.row_acc);
        if (l > 0) ws.grad_a = std::move(next_grad);
    }
}

template <typename T>
void check_batch(const ModelParams<T>& params, const Batch<T>& batch) {
    const ModelConfig& c = params.config();
    if (batch.channels != c.in_channels) {
        throw ShapeError("batch has " + std::to_string(batch.channels) + " channels, model expects " +
                         std::to_string(c.in_channels));
    }
    if (batch.size != c.input_size) {
        throw ShapeError("batch side " + std::to_string(batch.size) + " does not match model input side " +
                         std::to_string(c.input_size));
    }
    if (batch.data.size() != static_cast<std::size_t>(batch.count) * batch.item_size()) {
        throw ShapeError("batch buffer size does not match its declared shape");
    }
}

template <typename T>
T clamp_probability(T p) {
    const T lo = static_cast<T>(kProbabilityClamp);
    const T hi = static_cast<T>(1.0 - kProbabilityClamp);
    return std::clamp(p, lo, hi);
}

}  // namespace

// ----------------------------------------------------------------- public ops

template <typename T>
std::vector<T> forward(const ModelParams<T>& params, const Batch<T>& batch, int workers) {
    check_batch(params, batch);
    std::vector<T> scores(static_cast<std::size_t>(batch.count));
    const int lanes = std::max(1, std::min(workers, batch.count));
    run_lanes(lanes, [&](int lane) {
        Workspace<T> ws(params.config());
        for (int b = lane; b < batch.count; b += lanes) {
            forward_item(params, batch.item(b), ws);
            scores[b] = clamp_probability(ws.score);
        }
    });
    return scores;
}

template <typename T>
LossAndGrad<T> loss_and_grad(const ModelParams<T>& params, const Batch<T>& batch, std::span<const int> labels,
                             int workers) {
    check_batch(params, batch);
    if (labels.size() != static_cast<std::size_t>(batch.count)) throw ShapeError("one label per batch item required");
    if (batch.count == 0) throw ShapeError("empty batch");
    for (const int y : labels) {
        if (y != 0 && y != 1) throw ConfigError("labels must be 0 or 1");
    }

    const int lanes = std::max(1, std::min(workers, batch.count));
    std::vector<std::vector<T>> lane_grads(static_cast<std::size_t>(lanes));
    std::vector<T> item_loss(static_cast<std::size_t>(batch.count));
    LossAndGrad<T> result;
    result.scores.resize(static_cast<std::size_t>(batch.count));
    const T inv_count = T(1) / static_cast<T>(batch.count);

    run_lanes(lanes, [&](int lane) {
        auto& grads = lane_grads[static_cast<std::size_t>(lane)];
        grads.assign(params.size(), T(0));
        Workspace<T> ws(params.config());
        for (int b = lane; b < batch.count; b += lanes) {
            forward_item(params, batch.item(b), ws);
            const T p_raw = ws.score;
            const T p = clamp_probability(p_raw);
            const T y = static_cast<T>(labels[b]);
            item_loss[b] = -(y * std::log(p) + (T(1) - y) * std::log(T(1) - p));
            result.scores[b] = p;
            // d(BCE)/d(logit) = p - y inside the clamp interval, 0 where clamped.
            const T dlogit = (p == p_raw) ? (p_raw - y) * inv_count : T(0);
            backward_item(params, batch.item(b), ws, dlogit, grads);
        }
    });

    result.grads = std::move(lane_grads[0]);
    for (int lane = 1; lane < lanes; ++lane) {
        const auto& g = lane_grads[static_cast<std::size_t>(lane)];
        for (std::size_t k = 0; k < g.size(); ++k) result.grads[k] += g[k];
    }
    T total = 0;
    for (const T l : item_loss) total += l;
    result.loss = total * inv_count;
    if (!std::isfinite(result.loss)) throw NumericalError("non-finite loss");
    return result;
}

template <typename T>
void sgd_momentum_step(ModelParams<T>& params, std::span<const T> grads, T learning_rate, T momentum) {
    if (grads.size() != params.size()) throw ShapeError("gradient size does not match parameter count");
    auto w = params.values();
    auto v = params.velocity();
    for (std::size_t k = 0; k < w.size(); ++k) {
        v[k] = momentum * v[k] - learning_rate * grads[k];
        w[k] += v[k];
    }
}

template class ModelParams<float>;
template class ModelParams<double>;
template std::vector<float> forward(const ModelParams<float>&, const Batch<float>&, int);
template std::vector<double> forward(const ModelParams<double>&, const Batch<double>&, int);
template LossAndGrad<float> loss_and_grad(const ModelParams<float>&, const Batch<float>&, std::span<const int>, int);
template LossAndGrad<double> loss_and_grad(const ModelParams<double>&, const Batch<double>&, std::span<const int>,
                                           int);
template void sgd_momentum_step(ModelParams<float>&, std::span<const float>, float, float);
template void sgd_momentum_step(ModelParams<double>&, std::span<const double>, double, double);
template ModelParams<double> convert_params(const ModelParams<float>&);
template ModelParams<float> convert_params(const ModelParams<double>&);
template ModelParams<float> convert_params(const ModelParams<float>&);
template ModelParams<double> convert_params(const ModelParams<double>&);

}  // namespace gandetect
