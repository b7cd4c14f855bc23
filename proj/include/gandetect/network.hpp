#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gandetect {

/// Layer ladder of the detector CNN.
///
/// Six stride-1 "same"-padded convolutions with kernel sizes 3,5,3,5,3,5.
/// Odd-numbered layers (1st, 3rd, 5th) are followed by ReLU, even-numbered
/// ones by 2x2/stride-2 max pooling. The head is dense(dense_width) + ReLU
/// followed by dense(1) + sigmoid. Only the input channel count, the input
/// side and the layer widths vary between configurations.
struct ModelConfig {
    static constexpr int kConvLayers = 6;
    static constexpr std::array<int, kConvLayers> kKernelSizes = {3, 5, 3, 5, 3, 5};

    int in_channels = 6;
    int input_size = 256;
    std::array<int, kConvLayers> conv_widths = {32, 32, 64, 64, 128, 128};
    int dense_width = 256;
    /// Constant multiplier applied to every input value before the first
    /// convolution. Sum-normalized 256x256 slices average 1/65536 per cell;
    /// a gain of 65536 brings them to unit mean.
    double input_gain = 1.0;

    /// Full-size detector on 256x256 co-occurrence tensors.
    static ModelConfig standard(int in_channels);
    /// Same ladder with every convolution `conv_width` wide.
    static ModelConfig reduced(int in_channels, int input_size, int conv_width, int dense_width);

    static constexpr bool pools_after(int layer) noexcept { return layer % 2 == 1; }

    /// Throws ConfigError on non-positive widths or an input side not divisible by 8.
    void validate() const;

    int flatten_width() const noexcept;
    std::size_t parameter_count() const noexcept;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One named parameter tensor inside the flat parameter vector.
struct TensorSlot {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;

    friend bool operator==(const TensorSlot&, const TensorSlot&) = default;
};

/// Shape walk over the ladder: the parameter table plus the activation
/// shape after every stage.
struct ShapeReport {
    std::vector<TensorSlot> slots;
    std::vector<std::array<int, 3>> stage_shapes;  // (channels, rows, cols) after each conv stage
    int flatten_width = 0;
    std::size_t parameter_count = 0;
};

ShapeReport walk_shapes(const ModelConfig& config);

/// Weights, biases and momentum buffers stored as flat vectors addressed
/// through `slots()`. Conv weights are laid out [out][in][ky][kx], dense
/// weights [out][in].
template <typename T>
class ModelParams {
public:
    ModelParams() = default;
    explicit ModelParams(const ModelConfig& config);

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<TensorSlot>& slots() const noexcept { return slots_; }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    std::span<T> velocity() noexcept { return velocity_; }
    std::span<const T> velocity() const noexcept { return velocity_; }

    std::span<T> tensor(std::size_t slot) noexcept {
        return std::span<T>(values_).subspan(slots_[slot].offset, slots_[slot].size);
    }
    std::span<const T> tensor(std::size_t slot) const noexcept {
        return std::span<const T>(values_).subspan(slots_[slot].offset, slots_[slot].size);
    }

    std::size_t size() const noexcept { return values_.size(); }

    /// Fan-in scaled uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)],
    /// zero biases, zero momentum.
    void initialize(std::uint64_t seed);

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    ModelConfig config_;
    std::vector<TensorSlot> slots_;
    std::vector<T> values_;
    std::vector<T> velocity_;
};

/// Batch of network inputs, channels-first: item, channel, row, column.
template <typename T>
struct Batch {
    int count = 0;
    int channels = 0;
    int size = 0;
    std::vector<T> data;

    Batch() = default;
    Batch(int count, int channels, int size)
        : count(count), channels(channels), size(size),
          data(static_cast<std::size_t>(count) * channels * size * size, T(0)) {}

    std::size_t item_size() const noexcept { return static_cast<std::size_t>(channels) * size * size; }
    std::span<T> item(int b) noexcept { return std::span<T>(data).subspan(b * item_size(), item_size()); }
    std::span<const T> item(int b) const noexcept { return std::span<const T>(data).subspan(b * item_size(), item_size()); }
};

template <typename T>
struct LossAndGrad {
    T loss = 0;
    std::vector<T> grads;   // same layout as ModelParams::values()
    std::vector<T> scores;  // sigmoid outputs, one per item
};

inline constexpr double kProbabilityClamp = 1e-7;

/// Sigmoid scores in (0, 1), one per batch item. Throws ShapeError when the
/// batch does not match the configuration, NumericalError naming the layer
/// when an activation becomes non-finite. Items are spread over `workers`
/// threads; each score depends only on its own item.
template <typename T>
std::vector<T> forward(const ModelParams<T>& params, const Batch<T>& batch, int workers = 1);

/// Mean binary cross-entropy (p clamped to [1e-7, 1 - 1e-7]) and its exact
/// gradient. Per-item gradients are summed in a fixed lane order that depends
/// only on `workers`, so results are reproducible for a given worker count.
template <typename T>
LossAndGrad<T> loss_and_grad(const ModelParams<T>& params, const Batch<T>& batch, std::span<const int> labels,
                             int workers = 1);

/// Classical momentum: v <- mu * v - lr * g; w <- w + v.
template <typename T>
void sgd_momentum_step(ModelParams<T>& params, std::span<const T> grads, T learning_rate, T momentum);

/// Converts parameter values (and momentum) between precisions.
template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params);

}  // namespace gandetect
