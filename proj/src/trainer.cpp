#include "gandetect/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "gandetect/errors.hpp"
#include "gandetect/hashing.hpp"
#include "gandetect/parallel.hpp"
#include "gandetect/random.hpp"

namespace gandetect {

namespace {

Batch<float> gather(const SampleSource& source, std::span<const std::size_t> indices, std::vector<int>& labels,
                    int workers) {
    Batch<float> batch(static_cast<int>(indices.size()), source.channels(), source.side());
    labels.resize(indices.size());
    parallel_jobs(indices.size(), workers, [&](std::size_t k) {
        source.fill(indices[k], batch.item(static_cast<int>(k)));
        labels[k] = source.label(indices[k]);
    });
    return batch;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (epochs < 0) throw ConfigError("epoch count must be non-negative");
    if (workers < 1) throw ConfigError("worker count must be at least 1");
}

std::string TrainConfig::canonical() const {
    std::ostringstream s;
    s.precision(17);
    s << "lr=" << learning_rate << ";mu=" << momentum << ";batch=" << batch_size << ";epochs=" << epochs
      << ";seed=" << seed << ";workers=" << workers << ";loss=bce";
    if (target_val_accuracy) s << ";target=" << *target_val_accuracy;
    return s.str();
}

std::string TrainConfig::fingerprint() const {
    return short_digest(canonical());
}

void TensorSamples::add(const CooccurrenceTensor& tensor, int label) {
    if (tensor.channels() != channels_) throw ShapeError("tensor channel count does not match sample set");
    tensors_.push_back(SparseTensor::from(tensor));
    labels_.push_back(label);
}

void TensorSamples::add(SparseTensor tensor, int label) {
    if (tensor.channels != channels_) throw ShapeError("tensor channel count does not match sample set");
    tensors_.push_back(std::move(tensor));
    labels_.push_back(label);
}

void write_metrics(std::ostream& out, const EpochMetrics& m) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch=%d split=train loss=%.6f accuracy=%.4f\n", m.epoch, m.train_loss,
                  m.train_accuracy);
    out << line;
    std::snprintf(line, sizeof(line), "epoch=%d split=val loss=%.6f accuracy=%.4f\n", m.epoch, m.val_loss,
                  m.val_accuracy);
    out << line;
}

double accuracy(std::span<const float> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    if (scores.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const int decision = scores[k] >= 0.5f ? 1 : 0;
        correct += decision == labels[k] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double mean_bce(std::span<const float> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    if (scores.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const double p = std::clamp(static_cast<double>(scores[k]), kProbabilityClamp, 1.0 - kProbabilityClamp);
        total += labels[k] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(scores.size());
}

std::vector<float> predict(const ModelParams<float>& params, const SampleSource& source, int batch_size, int workers) {
    std::vector<float> scores;
    scores.reserve(source.size());
    std::vector<std::size_t> indices;
    std::vector<int> labels;
    for (std::size_t start = 0; start < source.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(source.size(), start + static_cast<std::size_t>(batch_size));
        indices.resize(end - start);
        std::iota(indices.begin(), indices.end(), start);
        const auto batch = gather(source, indices, labels, workers);
        const auto s = forward(params, batch, workers);
        scores.insert(scores.end(), s.begin(), s.end());
    }
    return scores;
}

TrainResult train(ModelParams<float> params, const SampleSource& train_set, const SampleSource& val_set,
                  const TrainConfig& config, const ProgressSink& progress) {
    config.validate();
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    if (train_set.channels() != params.config().in_channels || val_set.channels() != params.config().in_channels) {
        throw ShapeError("sample channel count does not match the model");
    }

    TrainResult result;
    result.params = params;
    if (config.epochs == 0) return result;

    std::vector<int> val_labels(val_set.size());
    for (std::size_t k = 0; k < val_set.size(); ++k) val_labels[k] = val_set.label(k);

    std::mt19937_64 rng(derive_seed(config.seed, 0x7368756666ULL));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> labels;
    double best_accuracy = -1.0;

    const auto lr = static_cast<float>(config.learning_rate);
    const auto mu = static_cast<float>(config.momentum);
    const auto step = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_in_place(std::span<std::size_t>(order), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += step, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + step);
            const auto batch = gather(train_set, std::span(order).subspan(start, end - start), labels, config.workers);
            LossAndGrad<float> lg;
            try {
                lg = loss_and_grad(params, batch, labels, config.workers);
            } catch (const NumericalError& e) {
                throw TrainingError(std::string("training diverged: ") + e.what(), epoch, batch_index);
            }
            if (!std::isfinite(lg.loss)) throw TrainingError("training diverged: non-finite loss", epoch, batch_index);
            loss_sum += static_cast<double>(lg.loss) * static_cast<double>(end - start);
            for (std::size_t k = 0; k < lg.scores.size(); ++k) {
                correct += ((lg.scores[k] >= 0.5f ? 1 : 0) == labels[k]) ? 1 : 0;
            }
            sgd_momentum_step(params, std::span<const float>(lg.grads), lr, mu);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(order.size());
        m.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        if (val_set.size() > 0) {
            std::vector<float> scores;
            try {
                scores = predict(params, val_set, config.batch_size, config.workers);
            } catch (const NumericalError& e) {
                throw TrainingError(std::string("validation diverged: ") + e.what(), epoch, -1);
            }
            m.val_loss = mean_bce(scores, val_labels);
            m.val_accuracy = accuracy(scores, val_labels);
        }
        result.history.push_back(m);
        if (progress) progress(m);

        if (m.val_accuracy > best_accuracy) {
            best_accuracy = m.val_accuracy;
            result.best_epoch = epoch;
            result.params = params;
        }
        if (config.target_val_accuracy && m.val_accuracy >= *config.target_val_accuracy) break;
    }
    return result;
}

}  // namespace gandetect
