#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gandetect/feature_cache.hpp"
#include "gandetect/manifest.hpp"
#include "gandetect/network.hpp"
#include "gandetect/postprocess.hpp"
#include "gandetect/result_table.hpp"
#include "gandetect/trainer.hpp"

namespace gandetect {

enum class TrainingMode { Unaware, JpegAware };

std::string_view to_string(TrainingMode mode) noexcept;
TrainingMode parse_training_mode(std::string_view text);

// Named parameter grids selected by the "paper" preset.
std::vector<int> paper_train_qf_grid();
std::vector<int> paper_eval_qf_grid();
std::vector<PostProcessSpec> paper_robustness_grid();
std::vector<PostProcessSpec> paper_jpeg_robustness_operations();

/// Gain that brings the average input cell to unit scale: 65536 for
/// per-slice-sum tensors, 1 for raw counts.
double default_input_gain(Normalization normalization) noexcept;

/// Everything that determines an experiment's outcome, plus two runtime
/// knobs (`workers`, `cache_dir`) that do not enter the fingerprint.
struct ExperimentPlan {
    Detector detector = Detector::CrossCoNet;
    TrainingMode mode = TrainingMode::Unaware;
    std::vector<int> train_qf_grid = paper_train_qf_grid();
    std::vector<int> eval_qf_grid = paper_eval_qf_grid();
    std::vector<PostProcessSpec> robustness_grid = paper_robustness_grid();
    std::vector<PostProcessSpec> jpeg_robustness_operations = paper_jpeg_robustness_operations();
    std::size_t images_per_class_per_condition = 2000;
    std::uint64_t seed = 0;
    OffsetSpec offsets;
    Normalization normalization = Normalization::PerSliceSum;
    ChromaSubsampling jpeg_subsampling = ChromaSubsampling::k420;

    std::array<int, ModelConfig::kConvLayers> conv_widths = ModelConfig{}.conv_widths;
    int dense_width = ModelConfig{}.dense_width;
    std::optional<double> input_gain;  // default_input_gain(normalization) when unset

    /// Learning rate, momentum, batch size, epochs and early stop. The
    /// training seed is derived from `seed`.
    TrainConfig training;
    /// Train from scratch when an operation needs a model and none was given.
    bool train_when_missing = false;

    int workers = 1;
    std::optional<std::filesystem::path> cache_dir;

    FeatureSpec features() const { return {detector, offsets, normalization}; }
    ModelConfig model_config() const;
    /// Training configuration with the derived seed and the plan's workers.
    TrainConfig train_config() const;

    /// Throws ConfigError (for example jpeg_aware mode with an empty train grid).
    void validate() const;
    /// 16 hex digits over every outcome-relevant field.
    std::string fingerprint() const;
};

/// Canonical JSON form of a plan; `runtime` adds workers and cache_dir.
std::string plan_to_json(const ExperimentPlan& plan, bool runtime = true);
/// Parses a run configuration. Unknown keys are rejected. `robustness_grid`
/// may be the string "paper" or a list of operation records such as
/// {"kind": "median", "window": 3}.
ExperimentPlan plan_from_json(std::string_view text);

std::string spec_to_json(const PostProcessSpec& spec);
PostProcessSpec spec_from_json(std::string_view text);

/// Declarative run file: a plan plus the manifest it runs on.
struct RunConfig {
    ExperimentPlan plan;
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> checkpoint;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Resolves manifest paths to decoded images.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual ImageBuffer load(const std::string& path) const = 0;
};

/// Decodes files; relative paths are resolved against `root`.
class DiskImageSource final : public ImageSource {
public:
    explicit DiskImageSource(std::filesystem::path root = {}) : root_(std::move(root)) {}
    ImageBuffer load(const std::string& path) const override;

private:
    std::filesystem::path root_;
};

/// Images held in memory under synthetic paths.
class MemoryImageSource final : public ImageSource {
public:
    void add(std::string path, ImageBuffer image);
    ImageBuffer load(const std::string& path) const override;

private:
    std::map<std::string, ImageBuffer> images_;
};

/// 16 hex digits over the manifest's canonical text.
std::string dataset_fingerprint(const DatasetManifest& manifest);

/// Test entries used for evaluation: the first `per_class` real and the
/// first `per_class` GAN test entries in manifest order (all when fewer).
std::vector<ManifestEntry> evaluation_entries(const DatasetManifest& manifest, std::size_t per_class);

/// One QF per item: a seeded shuffle of the indices, then grid values
/// dealt round-robin along the shuffled order.
std::vector<int> assign_qualities(std::size_t count, const std::vector<int>& grid, std::uint64_t seed);

/// Throws ConfigError when any path occurs in both lists.
void ensure_disjoint(const std::vector<ManifestEntry>& training, const std::vector<ManifestEntry>& evaluation);

/// Seed of the randomized operators for one condition; depends on the plan
/// seed and the condition's kind and parameter, not on grid position.
std::uint64_t condition_seed(std::uint64_t seed, const PostProcessSpec& spec);

struct TrainedModel {
    ModelParams<float> params;
    std::vector<EpochMetrics> history;
    int best_epoch = 0;
    std::string fingerprint;
};

/// Trains a detector on the manifest's train split, validating on its val
/// split. In jpeg_aware mode every train and val image is first
/// JPEG-compressed at its assigned grid QF.
TrainedModel train_detector(const ExperimentPlan& plan, const DatasetManifest& manifest, const ImageSource& images,
                            const ProgressSink& progress = {});

/// Per-image transform applied before feature extraction; `index` is the
/// image's position in the evaluation list.
using ImageTransform = std::function<ImageBuffer(const ImageBuffer& image, std::size_t index)>;

/// Scores `entries` after `transform`, thresholds at 0.5 and fills the
/// accuracy fields of a row. Scores depend only on the image, so the row is
/// independent of `workers`.
ResultRow evaluate_condition(const ModelParams<float>& params, const ExperimentPlan& plan,
                             const std::vector<ManifestEntry>& entries, const ImageSource& images,
                             const ImageTransform& transform, int workers);

/// Test-set accuracy of an unprocessed condition. When `model` is empty the
/// plan must allow training, otherwise ConfigError.
ResultTable run_plain_detection(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                const ImageSource& images, const std::optional<ModelParams<float>>& model);

/// One row per robustness_grid entry, in grid order. A condition whose
/// operator throws is recorded as failed; the others still run.
ResultTable run_robustness_sweep(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                 const ImageSource& images, const ModelParams<float>& model);

struct JpegAwareOutcome {
    TrainedModel model;
    ResultTable table;
};

/// Trains in jpeg_aware mode, then one row per eval QF. The summary holds
/// matched_mean, mismatched_mean and matched_minus_mismatched (the latter
/// two only when the eval grid contains QFs outside the train grid).
JpegAwareOutcome run_jpeg_aware(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                const ImageSource& images, const ProgressSink& progress = {});

/// Evaluation half of run_jpeg_aware for an existing model.
ResultTable evaluate_jpeg_grid(const ExperimentPlan& plan, const DatasetManifest& manifest,
                               const ImageSource& images, const ModelParams<float>& model);

/// Rows for every (operation, eval QF) pair, operation-major: the operation
/// is applied first, then JPEG compression at the QF.
ResultTable run_jpeg_aware_robustness(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                      const ImageSource& images, const ModelParams<float>& model);

}  // namespace gandetect
