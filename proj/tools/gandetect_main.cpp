// gandetect: command-line front end for feature extraction, training,
// evaluation, robustness sweeps, JPEG-aware runs and the self-test.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "gandetect/checkpoint.hpp"
#include "gandetect/codec.hpp"
#include "gandetect/errors.hpp"
#include "gandetect/feature_cache.hpp"
#include "gandetect/manifest.hpp"
#include "gandetect/parallel.hpp"
#include "gandetect/pipeline.hpp"

namespace {

using namespace gandetect;

constexpr int kExitFailure = 1;
constexpr int kExitPartial = 3;

/// Options shared by the experiment verbs. Unset values leave the plan
/// (defaults or --config) untouched.
struct CommonOptions {
    std::string config;
    std::string manifest;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string detector;
    std::string normalization;
    std::string delta;
    std::string delta_cross;
    std::optional<std::size_t> images_per_class;
    std::string cache_dir;
    std::string tsv;
    std::string widths;
    std::optional<int> dense;
    std::optional<double> gain;
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<double> momentum;
    std::optional<int> batch;
    std::optional<double> target;
    std::string subsampling;
};

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": '" + text + "' is not a comma-separated integer list");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + " is empty");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": '" + text + "' is not a comma-separated number list");
        }
    }
    return out;
}

Offset parse_offset_flag(const std::string& text, const char* what) {
    const auto v = parse_int_list(text, what);
    if (v.size() != 2) throw ConfigError(std::string(what) + " expects dx,dy");
    return {v[0], v[1]};
}

void add_feature_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--detector", o.detector, "cross_conet (6 slices) or conet (3 slices)");
    cmd->add_option("--normalization", o.normalization, "per-slice-sum (default) or raw");
    cmd->add_option("--delta", o.delta, "intra-band offset dx,dy (default 1,1)");
    cmd->add_option("--delta-cross", o.delta_cross, "cross-band offset dx,dy (default 0,0)");
}

void add_common_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--manifest", o.manifest, "dataset manifest (or 'manifest' in --config)");
    cmd->add_option("--seed", o.seed, "seed for every random choice");
    cmd->add_option("--workers", o.workers, "worker threads (default: available parallelism)");
    add_feature_options(cmd, o);
    cmd->add_option("--images-per-class", o.images_per_class, "evaluated images per class and condition (default 2000)");
    cmd->add_option("--cache-dir", o.cache_dir, std::string("tensor cache directory (default $") + kCacheDirVariable + ")");
    cmd->add_option("--tsv", o.tsv, "also write the result table as TSV to this file");
    cmd->add_option("--widths", o.widths, "six conv widths, comma-separated (default 32,32,64,64,128,128)");
    cmd->add_option("--dense", o.dense, "dense layer width (default 256)");
    cmd->add_option("--input-gain", o.gain, "input multiplier (default 65536 for per-slice-sum, 1 for raw)");
    cmd->add_option("--epochs", o.epochs, "training epochs (default 40)");
    cmd->add_option("--lr", o.lr, "learning rate (default 0.01)");
    cmd->add_option("--momentum", o.momentum, "momentum (default 0.9)");
    cmd->add_option("--batch", o.batch, "batch size (default 40)");
    cmd->add_option("--target-accuracy", o.target, "stop once validation accuracy reaches this value");
    cmd->add_option("--jpeg-subsampling", o.subsampling, "4:2:0 (default) or 4:4:4");
}

struct Context {
    ExperimentPlan plan;
    std::optional<std::filesystem::path> manifest_path;
    std::optional<std::filesystem::path> checkpoint_path;
};

Context build_context(const CommonOptions& o) {
    Context ctx;
    if (!o.config.empty()) {
        auto run = load_run_config(o.config);
        ctx.plan = std::move(run.plan);
        ctx.manifest_path = run.manifest;
        ctx.checkpoint_path = run.checkpoint;
    } else {
        ctx.plan.workers = default_workers();
    }
    ExperimentPlan& p = ctx.plan;
    if (!o.manifest.empty()) ctx.manifest_path = o.manifest;
    if (o.seed) p.seed = *o.seed;
    if (o.workers) p.workers = *o.workers;
    if (!o.detector.empty()) p.detector = parse_detector(o.detector);
    if (!o.normalization.empty()) p.normalization = parse_normalization(o.normalization);
    if (!o.delta.empty()) p.offsets.delta = parse_offset_flag(o.delta, "--delta");
    if (!o.delta_cross.empty()) p.offsets.delta_cross = parse_offset_flag(o.delta_cross, "--delta-cross");
    if (o.images_per_class) p.images_per_class_per_condition = *o.images_per_class;
    if (!o.cache_dir.empty()) {
        p.cache_dir = o.cache_dir;
    } else if (!p.cache_dir) {
        if (const auto env = FeatureCache::from_environment()) p.cache_dir = env->directory();
    }
    if (!o.widths.empty()) {
        const auto w = parse_int_list(o.widths, "--widths");
        if (w.size() != p.conv_widths.size()) throw ConfigError("--widths expects six values");
        std::copy(w.begin(), w.end(), p.conv_widths.begin());
    }
    if (o.dense) p.dense_width = *o.dense;
    if (o.gain) p.input_gain = *o.gain;
    if (o.epochs) p.training.epochs = *o.epochs;
    if (o.lr) p.training.learning_rate = *o.lr;
    if (o.momentum) p.training.momentum = *o.momentum;
    if (o.batch) p.training.batch_size = *o.batch;
    if (o.target) p.training.target_val_accuracy = *o.target;
    if (!o.subsampling.empty()) {
        if (o.subsampling == "4:2:0") p.jpeg_subsampling = ChromaSubsampling::k420;
        else if (o.subsampling == "4:4:4") p.jpeg_subsampling = ChromaSubsampling::k444;
        else throw ConfigError("--jpeg-subsampling expects 4:2:0 or 4:4:4");
    }
    return ctx;
}

DatasetManifest require_manifest(const Context& ctx) {
    if (!ctx.manifest_path) throw ConfigError("a dataset manifest is required (--manifest or 'manifest' in --config)");
    return load_manifest(*ctx.manifest_path);
}

DiskImageSource image_source(const Context& ctx) {
    return DiskImageSource(ctx.manifest_path ? ctx.manifest_path->parent_path() : std::filesystem::path{});
}

/// Loads the checkpoint and adopts its layer widths and input gain so the
/// provenance header describes the model actually evaluated.
ModelParams<float> require_model(Context& ctx, const std::string& flag) {
    const std::filesystem::path path = !flag.empty() ? std::filesystem::path(flag)
                                                     : ctx.checkpoint_path.value_or(std::filesystem::path{});
    if (path.empty()) throw ConfigError("a trained checkpoint is required (--model or 'checkpoint' in --config)");
    auto params = load_model(path).params;
    const ModelConfig& c = params.config();
    ctx.plan.conv_widths = c.conv_widths;
    ctx.plan.dense_width = c.dense_width;
    ctx.plan.input_gain = c.input_gain;
    return params;
}

void print_header(const std::string& verb, const ExperimentPlan& plan) {
    std::cout << "# gandetect " << kVersion << " verb=" << verb << " seed=" << plan.seed
              << " config=" << plan.fingerprint() << '\n';
}

/// Prints the table, writes the optional TSV and returns the exit status.
int emit(const ResultTable& table, const CommonOptions& o) {
    render_aligned(table, std::cout);
    if (!o.tsv.empty()) {
        std::ofstream out(o.tsv);
        if (!out) throw ConfigError(o.tsv + ": cannot open for writing");
        write_tsv(table, out);
    }
    const auto failed = table.failed_rows();
    if (failed.empty()) return 0;
    std::cerr << failed.size() << " condition(s) failed:\n";
    for (const auto* row : failed) {
        std::cerr << "  " << row->condition << " " << row->parameter << (row->qf ? " QF=" + std::to_string(*row->qf) : "")
                  << ": " << row->error << '\n';
    }
    return kExitPartial;
}

std::vector<PostProcessSpec> load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open grid file");
    std::stringstream text;
    text << in.rdbuf();
    // Reuse the run-configuration parser so grid files accept the same records.
    return plan_from_json("{\"robustness_grid\": " + text.str() + "}").robustness_grid;
}

ProgressSink metrics_sink(std::ostream* extra) {
    return [extra](const EpochMetrics& m) {
        write_metrics(std::cout, m);
        std::cout.flush();
        if (extra) write_metrics(*extra, m);
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN-face detection with cross-band co-occurrence tensors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(gandetect::kVersion));

    CommonOptions common;

    // extract
    auto* extract = app.add_subcommand("extract", "write co-occurrence tensor cache files");
    std::string in_path, out_path, out_dir;
    extract->add_option("--in", in_path, "input PNG or JPEG image");
    extract->add_option("--out", out_path, "output tensor file (.coocc)");
    extract->add_option("--manifest", common.manifest, "extract every manifest entry instead of --in");
    extract->add_option("--out-dir", out_dir, "directory for content-addressed tensors (with --manifest)");
    extract->add_option("--seed", common.seed, "recorded in the provenance header");
    extract->add_option("--workers", common.workers, "worker threads");
    add_feature_options(extract, common);

    // split
    auto* split = app.add_subcommand("split", "build a stratified train/val/test manifest from two image folders");
    std::string real_dir, gan_dir, ratios_text = "0.6,0.2,0.2";
    std::uint64_t split_seed = 0;
    split->add_option("--real", real_dir, "folder of real images")->required();
    split->add_option("--gan", gan_dir, "folder of GAN images")->required();
    split->add_option("--out", out_path, "manifest file to write")->required();
    split->add_option("--ratios", ratios_text, "train,val,test fractions");
    split->add_option("--seed", split_seed, "shuffle seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a detector on the manifest's train split");
    std::string model_out, metrics_path, mode_text;
    add_common_options(train_cmd, common);
    train_cmd->add_option("--out", model_out, "checkpoint to write")->required();
    train_cmd->add_option("--metrics", metrics_path, "also write per-epoch metrics to this file");
    train_cmd->add_option("--mode", mode_text, "unaware (default) or jpeg_aware");

    // eval
    auto* eval = app.add_subcommand("eval", "plain detection accuracy on the test split");
    std::string model_in;
    add_common_options(eval, common);
    eval->add_option("--model", model_in, "trained checkpoint");

    // robustness
    auto* robustness = app.add_subcommand("robustness", "accuracy under each post-processing condition");
    std::string grid = "paper";
    add_common_options(robustness, common);
    robustness->add_option("--model", model_in, "trained checkpoint");
    robustness->add_option("--grid", grid, "'paper' or a JSON file listing operation records");

    // jpeg-aware
    auto* jpeg = app.add_subcommand("jpeg-aware", "train on JPEG-compressed images and evaluate per QF");
    std::string train_qf, eval_qf, jpeg_grid;
    bool with_ops = false;
    add_common_options(jpeg, common);
    jpeg->add_option("--model", model_in, "evaluate this JPEG-aware checkpoint instead of training");
    jpeg->add_option("--out", model_out, "checkpoint to write after training");
    jpeg->add_option("--grid", jpeg_grid, "'paper' selects the preset train and eval QF grids");
    jpeg->add_option("--train-qf", train_qf, "training QFs, comma-separated");
    jpeg->add_option("--eval-qf", eval_qf, "evaluation QFs, comma-separated");
    jpeg->add_flag("--with-operations", with_ops, "also evaluate median/resize/noise followed by JPEG at each eval QF");

    // report
    auto* report = app.add_subcommand("report", "render a TSV result table");
    std::string table_in, format = "aligned";
    report->add_option("--in", table_in, "TSV table written by --tsv")->required();
    report->add_option("--format", format, "aligned or tsv")->check(CLI::IsMember({"aligned", "tsv"}));

    // selftest
    auto* selftest = app.add_subcommand("selftest", "run the oracle, gradient and toy-training checks");
    bool quick = false, timings = false;
    std::uint64_t selftest_seed = acceptance::SuiteOptions{}.seed;
    selftest->add_flag("--quick", quick, "skip the toy training criteria");
    selftest->add_flag("--timings", timings, "print wall-clock time per criterion");
    selftest->add_option("--seed", selftest_seed, "seed of the generated fixtures");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            Context ctx = build_context(common);
            print_header("extract", ctx.plan);
            const FeatureSpec spec = ctx.plan.features();
            if (!in_path.empty()) {
                if (out_path.empty()) throw ConfigError("extract --in requires --out");
                const auto tensor = spec.extract(decode_image(in_path));
                save_tensor(tensor, out_path);
                std::cout << in_path << '\t' << out_path << '\t' << tensor.channels() << " slices\n";
                return 0;
            }
            if (common.manifest.empty() || out_dir.empty()) {
                throw ConfigError("extract needs --in/--out or --manifest/--out-dir");
            }
            const auto manifest = load_manifest(common.manifest);
            const DiskImageSource images(std::filesystem::path(common.manifest).parent_path());
            const FeatureCache cache(out_dir);
            std::vector<std::string> keys(manifest.entries.size());
            parallel_jobs(keys.size(), ctx.plan.workers, [&](std::size_t k) {
                const auto image = images.load(manifest.entries[k].path);
                keys[k] = feature_key(image, spec);
                cache.extract(image, spec);
            });
            for (std::size_t k = 0; k < keys.size(); ++k) {
                std::cout << manifest.entries[k].path << '\t' << cache.path_for(keys[k]).string() << '\n';
            }
            return 0;
        }

        if (*split) {
            const auto ratios = parse_double_list(ratios_text, "--ratios");
            if (ratios.size() != 3) throw ConfigError("--ratios expects train,val,test");
            // Manifest paths are stored relative to the manifest's directory.
            const auto base = std::filesystem::absolute(std::filesystem::path(out_path)).parent_path();
            const auto relative = [&](const std::string& p) {
                return std::filesystem::proximate(std::filesystem::absolute(p), base).generic_string();
            };
            std::vector<LabeledPath> entries;
            for (const auto& p : list_images(real_dir)) entries.push_back({relative(p), Label::Real});
            for (const auto& p : list_images(gan_dir)) entries.push_back({relative(p), Label::Gan});
            const auto manifest = build_split(entries, SplitRatios{ratios[0], ratios[1], ratios[2]}, split_seed);
            save_manifest(manifest, out_path);
            std::cout << "# gandetect " << kVersion << " verb=split seed=" << split_seed << '\n';
            for (const Split s : {Split::Train, Split::Val, Split::Test}) {
                std::cout << to_string(s) << '\t' << manifest.select(s, Label::Real).size() << " real\t"
                          << manifest.select(s, Label::Gan).size() << " gan\n";
            }
            return 0;
        }

        if (*train_cmd) {
            Context ctx = build_context(common);
            if (!mode_text.empty()) ctx.plan.mode = parse_training_mode(mode_text);
            const auto manifest = require_manifest(ctx);
            print_header("train", ctx.plan);
            std::optional<std::ofstream> metrics;
            if (!metrics_path.empty()) metrics.emplace(metrics_path);
            const auto images = image_source(ctx);
            const auto model = train_detector(ctx.plan, manifest, images, metrics_sink(metrics ? &*metrics : nullptr));
            save_model(model_out, model.params, model.fingerprint);
            std::cout << "# best_epoch=" << model.best_epoch << " checkpoint=" << model_out << '\n';
            return 0;
        }

        if (*eval) {
            Context ctx = build_context(common);
            const auto manifest = require_manifest(ctx);
            std::optional<ModelParams<float>> model;
            if (!model_in.empty() || ctx.checkpoint_path) model = require_model(ctx, model_in);
            print_header("eval", ctx.plan);
            return emit(run_plain_detection(ctx.plan, manifest, image_source(ctx), model), common);
        }

        if (*robustness) {
            Context ctx = build_context(common);
            if (grid == "paper") {
                ctx.plan.robustness_grid = paper_robustness_grid();
            } else {
                ctx.plan.robustness_grid = load_grid_file(grid);
            }
            const auto manifest = require_manifest(ctx);
            const auto model = require_model(ctx, model_in);
            print_header("robustness", ctx.plan);
            return emit(run_robustness_sweep(ctx.plan, manifest, image_source(ctx), model), common);
        }

        if (*jpeg) {
            Context ctx = build_context(common);
            ctx.plan.mode = TrainingMode::JpegAware;
            if (!jpeg_grid.empty()) {
                if (jpeg_grid != "paper") throw ConfigError("--grid accepts only 'paper' for jpeg-aware runs");
                ctx.plan.train_qf_grid = paper_train_qf_grid();
                ctx.plan.eval_qf_grid = paper_eval_qf_grid();
                ctx.plan.jpeg_robustness_operations = paper_jpeg_robustness_operations();
            }
            if (!train_qf.empty()) ctx.plan.train_qf_grid = parse_int_list(train_qf, "--train-qf");
            if (!eval_qf.empty()) ctx.plan.eval_qf_grid = parse_int_list(eval_qf, "--eval-qf");
            const auto manifest = require_manifest(ctx);
            const auto images = image_source(ctx);
            print_header("jpeg-aware", ctx.plan);

            ResultTable table;
            ModelParams<float> params;
            if (!model_in.empty() || ctx.checkpoint_path) {
                params = require_model(ctx, model_in);
                table = evaluate_jpeg_grid(ctx.plan, manifest, images, params);
            } else {
                auto outcome = run_jpeg_aware(ctx.plan, manifest, images, metrics_sink(nullptr));
                if (!model_out.empty()) save_model(model_out, outcome.model.params, outcome.model.fingerprint);
                params = std::move(outcome.model.params);
                table = std::move(outcome.table);
            }
            int status = emit(table, common);
            if (with_ops) {
                std::cout << '\n';
                CommonOptions ops_out = common;
                if (!ops_out.tsv.empty()) ops_out.tsv += ".operations.tsv";
                status = std::max(status, emit(run_jpeg_aware_robustness(ctx.plan, manifest, images, params), ops_out));
            }
            return status;
        }

        if (*report) {
            std::ifstream in(table_in);
            if (!in) throw ConfigError(table_in + ": cannot open");
            const auto table = read_tsv(in);
            if (format == "tsv") {
                write_tsv(table, std::cout);
            } else {
                write_provenance(table.provenance, std::cout);
                render_aligned(table, std::cout);
            }
            return 0;
        }

        if (*selftest) {
            std::cout << "# gandetect " << kVersion << " verb=selftest seed=" << selftest_seed << '\n';
            acceptance::SuiteOptions options;
            options.seed = selftest_seed;
            options.include_training = !quick;
            int failures = 0;
            acceptance::run_suite(options, [&](const acceptance::CriterionResult& r) {
                std::cout << acceptance::verdict_line(r) << std::endl;
                if (timings) std::cerr << "criterion " << r.id << ": " << r.seconds << " s\n";
                if (!r.informational && !r.passed) ++failures;
            });
            std::cout << (failures ? "selftest: FAILED" : "selftest: ok") << '\n';
            return failures ? kExitFailure : 0;
        }
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << " (epoch " << e.epoch() << ", batch " << e.batch() << ")\n";
        return kExitFailure;
    } catch (const gandetect::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
