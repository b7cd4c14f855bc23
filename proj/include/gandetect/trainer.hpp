#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gandetect/cooccurrence.hpp"
#include "gandetect/network.hpp"

namespace gandetect {

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 40;
    int epochs = 40;
    std::uint64_t seed = 0;
    int workers = 1;
    /// Stop after the first epoch whose validation accuracy reaches this value.
    std::optional<double> target_val_accuracy;

    void validate() const;
    /// Stable text form of the hyper-parameters that shape the trajectory.
    std::string canonical() const;
    /// 16 hex digits derived from canonical().
    std::string fingerprint() const;
};

/// Random-access labeled input set. Implementations must be safe for
/// concurrent `fill` calls.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual int channels() const = 0;
    virtual int side() const = 0;
    virtual int label(std::size_t index) const = 0;
    virtual void fill(std::size_t index, std::span<float> out) const = 0;
};

/// In-memory sparse co-occurrence tensors.
class TensorSamples final : public SampleSource {
public:
    explicit TensorSamples(int channels) : channels_(channels) {}

    void add(const CooccurrenceTensor& tensor, int label);
    void add(SparseTensor tensor, int label);

    std::size_t size() const override { return tensors_.size(); }
    int channels() const override { return channels_; }
    int side() const override { return CooccurrenceTensor::kSide; }
    int label(std::size_t index) const override { return labels_[index]; }
    void fill(std::size_t index, std::span<float> out) const override { tensors_[index].densify(out); }

private:
    int channels_;
    std::vector<SparseTensor> tensors_;
    std::vector<int> labels_;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0;
    double train_accuracy = 0;
    double val_loss = 0;
    double val_accuracy = 0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Line record: `epoch=3 split=val loss=0.123456 accuracy=0.9700`.
void write_metrics(std::ostream& out, const EpochMetrics& m);

struct TrainResult {
    ModelParams<float> params;  // parameters of the epoch with the best validation accuracy
    std::vector<EpochMetrics> history;
    int best_epoch = 0;         // 0 when no epoch ran
};

using ProgressSink = std::function<void(const EpochMetrics&)>;

/// SGD with momentum over shuffled mini-batches. Shuffling derives from
/// `config.seed`; ties in validation accuracy keep the earlier epoch.
/// Throws TrainingError with epoch/batch indices when the loss diverges.
TrainResult train(ModelParams<float> params, const SampleSource& train_set, const SampleSource& val_set,
                  const TrainConfig& config, const ProgressSink& progress = {});

/// Scores every sample of `source` in order.
std::vector<float> predict(const ModelParams<float>& params, const SampleSource& source, int batch_size = 40,
                           int workers = 1);

/// Fraction of items where (score >= 0.5) agrees with label 1.
double accuracy(std::span<const float> scores, std::span<const int> labels);

/// Mean clamped binary cross-entropy of scores against labels.
double mean_bce(std::span<const float> scores, std::span<const int> labels);

}  // namespace gandetect
