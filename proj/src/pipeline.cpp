#include "gandetect/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "gandetect/codec.hpp"
#include "gandetect/errors.hpp"
#include "gandetect/hashing.hpp"
#include "gandetect/parallel.hpp"
#include "gandetect/random.hpp"

namespace gandetect {

namespace {

// Independent random streams derived from the plan seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamTrain = 2;
constexpr std::uint64_t kStreamTrainQf = 3;
constexpr std::uint64_t kStreamValQf = 4;
constexpr std::uint64_t kStreamCondition = 5;

// Images scored per chunk; bounds the number of live tensors.
constexpr std::size_t kEvalChunk = 128;

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::optional<FeatureCache> open_cache(const ExperimentPlan& plan) {
    if (plan.cache_dir) return FeatureCache(*plan.cache_dir);
    return std::nullopt;
}

SparseTensor extract_sparse(const ImageBuffer& image, const FeatureSpec& spec, const std::optional<FeatureCache>& cache) {
    return SparseTensor::from(cache ? cache->extract(image, spec) : spec.extract(image));
}

/// Loads, transforms and extracts every entry, in entry order.
TensorSamples build_samples(const std::vector<ManifestEntry>& entries, const ExperimentPlan& plan,
                            const ImageSource& images, const std::optional<FeatureCache>& cache,
                            const ImageTransform& transform, int workers) {
    const FeatureSpec spec = plan.features();
    std::vector<SparseTensor> tensors(entries.size());
    parallel_jobs(entries.size(), workers, [&](std::size_t k) {
        ImageBuffer image = images.load(entries[k].path);
        if (transform) image = transform(image, k);
        tensors[k] = extract_sparse(image, spec, cache);
    });
    TensorSamples samples(spec.channels());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        samples.add(std::move(tensors[k]), static_cast<int>(entries[k].label));
    }
    return samples;
}

ImageTransform jpeg_by_assignment(std::vector<int> qualities, ChromaSubsampling subsampling) {
    return [qualities = std::move(qualities), subsampling](const ImageBuffer& image, std::size_t index) {
        return jpeg_roundtrip(image, qualities[index], subsampling);
    };
}

Provenance make_provenance(const ExperimentPlan& plan, const DatasetManifest& manifest,
                           const std::vector<ManifestEntry>& evaluated) {
    Provenance p;
    p.seed = plan.seed;
    p.config_fingerprint = plan.fingerprint();
    p.dataset_fingerprint = dataset_fingerprint(manifest);
    std::size_t real = 0;
    for (const auto& e : evaluated) real += e.label == Label::Real ? 1 : 0;
    p.images_per_class = std::max(real, evaluated.size() - real);
    return p;
}

std::vector<ManifestEntry> training_entries(const DatasetManifest& manifest) {
    auto out = manifest.select(Split::Train);
    const auto val = manifest.select(Split::Val);
    out.insert(out.end(), val.begin(), val.end());
    return out;
}

/// Validates the plan and manifest and returns the evaluation list.
std::vector<ManifestEntry> prepare_evaluation(const ExperimentPlan& plan, const DatasetManifest& manifest) {
    plan.validate();
    manifest.validate();
    auto entries = evaluation_entries(manifest, plan.images_per_class_per_condition);
    if (entries.empty()) throw ConfigError("manifest has no test entries");
    ensure_disjoint(training_entries(manifest), entries);
    return entries;
}

void check_model(const ExperimentPlan& plan, const ModelParams<float>& model) {
    if (model.config().in_channels != plan.features().channels()) {
        throw ShapeError("model expects " + std::to_string(model.config().in_channels) + " input channels but the " +
                         std::string(to_string(plan.detector)) + " detector produces " +
                         std::to_string(plan.features().channels()));
    }
}

ResultRow run_condition(const ModelParams<float>& model, const ExperimentPlan& plan,
                        const std::vector<ManifestEntry>& entries, const ImageSource& images,
                        const ImageTransform& transform, int workers, std::string condition, std::string parameter,
                        std::optional<int> qf) {
    ResultRow row;
    try {
        row = evaluate_condition(model, plan, entries, images, transform, workers);
    } catch (const Error& e) {
        row = ResultRow{};
        row.failed = true;
        row.error = e.what();
        row.count = entries.size();
    }
    row.condition = std::move(condition);
    row.parameter = std::move(parameter);
    row.qf = qf;
    row.detector = std::string(to_string(plan.detector));
    return row;
}

bool contains(const std::vector<int>& grid, int value) {
    return std::find(grid.begin(), grid.end(), value) != grid.end();
}

}  // namespace

std::string_view to_string(TrainingMode mode) noexcept {
    return mode == TrainingMode::Unaware ? "unaware" : "jpeg_aware";
}

TrainingMode parse_training_mode(std::string_view text) {
    if (text == "unaware") return TrainingMode::Unaware;
    if (text == "jpeg_aware" || text == "jpeg-aware") return TrainingMode::JpegAware;
    throw ConfigError("unknown training mode '" + std::string(text) + "' (expected unaware or jpeg_aware)");
}

std::vector<int> paper_train_qf_grid() {
    return {75, 80, 85, 90, 95};
}

std::vector<int> paper_eval_qf_grid() {
    return {73, 75, 77, 80, 83, 85, 87, 90, 93, 95, 97};
}

std::vector<PostProcessSpec> paper_robustness_grid() {
    return {
        MedianFilter{3},      MedianFilter{5},      GaussianNoise{0.5},    GaussianNoise{0.8},
        GaussianNoise{2.0},   Clahe{1.0, 8, 8},     GammaCorrection{0.9},  GammaCorrection{0.8},
        GammaCorrection{1.2}, AverageBlur{3},       AverageBlur{5},        Resize{0.9},
        Resize{0.8},          Resize{0.5},          Zoom{1.1},             Zoom{1.2},
        Zoom{1.9},            Rotate{5.0},          Rotate{10.0},          Rotate{45.0},
        CenterCrop{880},      BlurSharpen{},
    };
}

std::vector<PostProcessSpec> paper_jpeg_robustness_operations() {
    return {MedianFilter{3}, Resize{0.9}, GaussianNoise{2.0}};
}

double default_input_gain(Normalization normalization) noexcept {
    return normalization == Normalization::PerSliceSum ? 65536.0 : 1.0;
}

ModelConfig ExperimentPlan::model_config() const {
    ModelConfig c;
    c.in_channels = features().channels();
    c.input_size = CooccurrenceTensor::kSide;
    c.conv_widths = conv_widths;
    c.dense_width = dense_width;
    c.input_gain = input_gain.value_or(default_input_gain(normalization));
    return c;
}

TrainConfig ExperimentPlan::train_config() const {
    TrainConfig t = training;
    t.seed = derive_seed(seed, kStreamTrain);
    t.workers = workers;
    return t;
}

void ExperimentPlan::validate() const {
    const auto check_grid = [](const std::vector<int>& grid, const char* name) {
        for (const int qf : grid) {
            if (qf < 1 || qf > 100) throw ConfigError(std::string(name) + ": QF " + std::to_string(qf) + " outside [1, 100]");
        }
    };
    check_grid(train_qf_grid, "train_qf_grid");
    check_grid(eval_qf_grid, "eval_qf_grid");
    if (mode == TrainingMode::JpegAware && train_qf_grid.empty()) {
        throw ConfigError("jpeg_aware mode requires a non-empty train_qf_grid");
    }
    if (images_per_class_per_condition == 0) throw ConfigError("images_per_class_per_condition must be positive");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    for (const auto& spec : robustness_grid) gandetect::validate(spec);
    for (const auto& spec : jpeg_robustness_operations) gandetect::validate(spec);
    model_config().validate();
    training.validate();
}

std::string ExperimentPlan::fingerprint() const {
    return short_digest(plan_to_json(*this, false));
}

ImageBuffer DiskImageSource::load(const std::string& path) const {
    const std::filesystem::path p(path);
    return decode_image(p.is_absolute() || root_.empty() ? p : root_ / p);
}

void MemoryImageSource::add(std::string path, ImageBuffer image) {
    images_.insert_or_assign(std::move(path), std::move(image));
}

ImageBuffer MemoryImageSource::load(const std::string& path) const {
    const auto it = images_.find(path);
    if (it == images_.end()) throw DecodeError(path + ": no such in-memory image");
    return it->second;
}

std::string dataset_fingerprint(const DatasetManifest& manifest) {
    std::ostringstream text;
    write_manifest(manifest, text);
    return short_digest(text.str());
}

std::vector<ManifestEntry> evaluation_entries(const DatasetManifest& manifest, std::size_t per_class) {
    std::vector<ManifestEntry> out;
    for (const Label label : {Label::Real, Label::Gan}) {
        auto entries = manifest.select(Split::Test, label);
        if (entries.size() > per_class) entries.resize(per_class);
        out.insert(out.end(), entries.begin(), entries.end());
    }
    return out;
}

std::vector<int> assign_qualities(std::size_t count, const std::vector<int>& grid, std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("QF grid is empty");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    shuffle_in_place(std::span<std::size_t>(order), rng);
    std::vector<int> qualities(count);
    for (std::size_t k = 0; k < count; ++k) qualities[order[k]] = grid[k % grid.size()];
    return qualities;
}

void ensure_disjoint(const std::vector<ManifestEntry>& training, const std::vector<ManifestEntry>& evaluation) {
    std::set<std::string> seen;
    for (const auto& e : training) seen.insert(e.path);
    for (const auto& e : evaluation) {
        if (seen.count(e.path)) throw ConfigError(e.path + " is used for both training and evaluation");
    }
}

std::uint64_t condition_seed(std::uint64_t seed, const PostProcessSpec& spec) {
    return derive_seed(derive_seed(seed, kStreamCondition), fnv1a(spec_to_json(spec)));
}

TrainedModel train_detector(const ExperimentPlan& plan, const DatasetManifest& manifest, const ImageSource& images,
                            const ProgressSink& progress) {
    plan.validate();
    manifest.validate();
    const auto train_list = manifest.select(Split::Train);
    const auto val_list = manifest.select(Split::Val);
    if (train_list.empty()) throw ConfigError("manifest has no training entries");

    ImageTransform train_transform;
    ImageTransform val_transform;
    if (plan.mode == TrainingMode::JpegAware) {
        train_transform = jpeg_by_assignment(
            assign_qualities(train_list.size(), plan.train_qf_grid, derive_seed(plan.seed, kStreamTrainQf)),
            plan.jpeg_subsampling);
        val_transform = jpeg_by_assignment(
            assign_qualities(val_list.size(), plan.train_qf_grid, derive_seed(plan.seed, kStreamValQf)),
            plan.jpeg_subsampling);
    }

    const auto cache = open_cache(plan);
    const auto train_set = build_samples(train_list, plan, images, cache, train_transform, plan.workers);
    const auto val_set = build_samples(val_list, plan, images, cache, val_transform, plan.workers);

    ModelParams<float> params(plan.model_config());
    params.initialize(derive_seed(plan.seed, kStreamInit));
    auto result = train(std::move(params), train_set, val_set, plan.train_config(), progress);
    return {std::move(result.params), std::move(result.history), result.best_epoch, plan.fingerprint()};
}

ResultRow evaluate_condition(const ModelParams<float>& params, const ExperimentPlan& plan,
                             const std::vector<ManifestEntry>& entries, const ImageSource& images,
                             const ImageTransform& transform, int workers) {
    const auto cache = open_cache(plan);
    std::size_t correct_real = 0, correct_gan = 0, n_real = 0, n_gan = 0;
    for (std::size_t start = 0; start < entries.size(); start += kEvalChunk) {
        const std::size_t end = std::min(entries.size(), start + kEvalChunk);
        const std::vector<ManifestEntry> chunk(entries.begin() + static_cast<std::ptrdiff_t>(start),
                                               entries.begin() + static_cast<std::ptrdiff_t>(end));
        ImageTransform shifted;
        if (transform) {
            shifted = [&transform, start](const ImageBuffer& image, std::size_t k) { return transform(image, start + k); };
        }
        const auto samples = build_samples(chunk, plan, images, cache, shifted, workers);
        const auto scores = predict(params, samples, plan.training.batch_size, workers);
        for (std::size_t k = 0; k < chunk.size(); ++k) {
            const bool says_gan = scores[k] >= 0.5f;
            if (chunk[k].label == Label::Gan) {
                ++n_gan;
                correct_gan += says_gan ? 1 : 0;
            } else {
                ++n_real;
                correct_real += says_gan ? 0 : 1;
            }
        }
    }
    ResultRow row;
    row.count = entries.size();
    const auto frac = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    row.accuracy = frac(correct_real + correct_gan, n_real + n_gan);
    row.real_accuracy = frac(correct_real, n_real);
    row.gan_accuracy = frac(correct_gan, n_gan);
    return row;
}

ResultTable run_plain_detection(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                const ImageSource& images, const std::optional<ModelParams<float>>& model) {
    const auto entries = prepare_evaluation(plan, manifest);
    std::optional<ModelParams<float>> trained;
    const ModelParams<float>* params = model ? &*model : nullptr;
    if (!params) {
        if (!plan.train_when_missing) throw ConfigError("no checkpoint given and training is disabled in the plan");
        trained = train_detector(plan, manifest, images).params;
        params = &*trained;
    }
    check_model(plan, *params);

    ResultTable table;
    table.title = "plain detection";
    table.provenance = make_provenance(plan, manifest, entries);
    auto row = evaluate_condition(*params, plan, entries, images, {}, plan.workers);
    row.condition = "No post-processing";
    row.parameter = "-";
    row.detector = std::string(to_string(plan.detector));
    table.rows.push_back(std::move(row));
    return table;
}

ResultTable run_robustness_sweep(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                 const ImageSource& images, const ModelParams<float>& model) {
    const auto entries = prepare_evaluation(plan, manifest);
    check_model(plan, model);

    ResultTable table;
    table.title = "robustness";
    table.provenance = make_provenance(plan, manifest, entries);
    const auto& grid = plan.robustness_grid;
    table.rows.resize(grid.size());
    // Conditions are the parallel unit; results land by index.
    const int inner_workers = grid.size() >= static_cast<std::size_t>(plan.workers) ? 1 : plan.workers;
    parallel_jobs(grid.size(), plan.workers, [&](std::size_t c) {
        const auto& spec = grid[c];
        const std::uint64_t cseed = condition_seed(plan.seed, spec);
        const ImageTransform transform = [&spec, cseed](const ImageBuffer& image, std::size_t index) {
            return apply(image, spec, derive_seed(cseed, index));
        };
        table.rows[c] = run_condition(model, plan, entries, images, transform, inner_workers, condition_label(spec),
                                      parameter_label(spec), std::nullopt);
    });
    return table;
}

ResultTable evaluate_jpeg_grid(const ExperimentPlan& plan, const DatasetManifest& manifest,
                               const ImageSource& images, const ModelParams<float>& model) {
    const auto entries = prepare_evaluation(plan, manifest);
    check_model(plan, model);

    ResultTable table;
    table.title = "jpeg-aware";
    table.provenance = make_provenance(plan, manifest, entries);
    const auto& grid = plan.eval_qf_grid;
    table.rows.resize(grid.size());
    const int inner_workers = grid.size() >= static_cast<std::size_t>(plan.workers) ? 1 : plan.workers;
    parallel_jobs(grid.size(), plan.workers, [&](std::size_t c) {
        const int qf = grid[c];
        const ImageTransform transform = [qf, &plan](const ImageBuffer& image, std::size_t) {
            return jpeg_roundtrip(image, qf, plan.jpeg_subsampling);
        };
        table.rows[c] = run_condition(model, plan, entries, images, transform, inner_workers, "JPEG",
                                      contains(plan.train_qf_grid, qf) ? "matched" : "mismatched", qf);
    });

    double matched = 0, mismatched = 0;
    std::size_t n_matched = 0, n_mismatched = 0;
    for (const auto& row : table.rows) {
        if (row.failed) continue;
        if (contains(plan.train_qf_grid, *row.qf)) {
            matched += row.accuracy;
            ++n_matched;
        } else {
            mismatched += row.accuracy;
            ++n_mismatched;
        }
    }
    if (n_matched) table.summary.emplace_back("matched_mean", matched / static_cast<double>(n_matched));
    if (n_mismatched) table.summary.emplace_back("mismatched_mean", mismatched / static_cast<double>(n_mismatched));
    if (n_matched && n_mismatched) {
        table.summary.emplace_back("matched_minus_mismatched", matched / static_cast<double>(n_matched) -
                                                                   mismatched / static_cast<double>(n_mismatched));
    }
    if (n_matched + n_mismatched) {
        table.summary.emplace_back("mean_accuracy",
                                   (matched + mismatched) / static_cast<double>(n_matched + n_mismatched));
    }
    return table;
}

JpegAwareOutcome run_jpeg_aware(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                const ImageSource& images, const ProgressSink& progress) {
    ExperimentPlan aware = plan;
    aware.mode = TrainingMode::JpegAware;
    JpegAwareOutcome out;
    out.model = train_detector(aware, manifest, images, progress);
    out.table = evaluate_jpeg_grid(aware, manifest, images, out.model.params);
    return out;
}

ResultTable run_jpeg_aware_robustness(const ExperimentPlan& plan, const DatasetManifest& manifest,
                                      const ImageSource& images, const ModelParams<float>& model) {
    const auto entries = prepare_evaluation(plan, manifest);
    check_model(plan, model);

    ResultTable table;
    table.title = "jpeg-aware robustness";
    table.provenance = make_provenance(plan, manifest, entries);
    const auto& ops = plan.jpeg_robustness_operations;
    const auto& qfs = plan.eval_qf_grid;
    const std::size_t jobs = ops.size() * qfs.size();
    table.rows.resize(jobs);
    const int inner_workers = jobs >= static_cast<std::size_t>(plan.workers) ? 1 : plan.workers;
    parallel_jobs(jobs, plan.workers, [&](std::size_t job) {
        const auto& spec = ops[job / qfs.size()];
        const int qf = qfs[job % qfs.size()];
        const std::uint64_t cseed = condition_seed(plan.seed, spec);
        const ImageTransform transform = [&spec, cseed, qf, &plan](const ImageBuffer& image, std::size_t index) {
            return jpeg_roundtrip(apply(image, spec, derive_seed(cseed, index)), qf, plan.jpeg_subsampling);
        };
        table.rows[job] = run_condition(model, plan, entries, images, transform, inner_workers, condition_label(spec),
                                        parameter_label(spec), qf);
    });
    return table;
}

}  // namespace gandetect
