#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gandetect/errors.hpp"
#include "gandetect/pipeline.hpp"

namespace gandetect {

namespace {

using nlohmann::json;

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void reject_unknown(const json& object, const std::vector<std::string_view>& allowed, const std::string& where) {
    const std::set<std::string_view> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : object.items()) {
        if (!keys.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T field(const json& object, const char* key, T fallback) {
    const auto it = object.find(key);
    if (it == object.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("run configuration: key '") + key + "' has the wrong type");
    }
}

std::string subsampling_name(ChromaSubsampling s) {
    return s == ChromaSubsampling::k420 ? "4:2:0" : "4:4:4";
}

ChromaSubsampling parse_subsampling(const std::string& text) {
    if (text == "4:2:0") return ChromaSubsampling::k420;
    if (text == "4:4:4") return ChromaSubsampling::k444;
    throw ConfigError("unknown chroma subsampling '" + text + "' (expected 4:2:0 or 4:4:4)");
}

json offset_json(Offset o) {
    return json::array({o.dx, o.dy});
}

Offset parse_offset(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw ConfigError(std::string(what) + " must be a two-element integer array [dx, dy]");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

json spec_object(const PostProcessSpec& spec) {
    return std::visit(
        overloaded{
            [](const MedianFilter& m) { return json{{"kind", "median"}, {"window", m.window}}; },
            [](const AverageBlur& a) { return json{{"kind", "avg_blur"}, {"window", a.window}}; },
            [](const GaussianNoise& n) {
                return json{{"kind", "gauss_noise"},
                            {"sigma", n.sigma},
                            {"unit", n.unit == NoiseUnit::Levels ? "levels" : "normalized"}};
            },
            [](const GammaCorrection& g) { return json{{"kind", "gamma"}, {"gamma", g.gamma}}; },
            [](const Clahe& c) {
                return json{{"kind", "clahe"},
                            {"clip_limit", c.clip_limit},
                            {"tile_rows", c.tile_rows},
                            {"tile_cols", c.tile_cols}};
            },
            [](const Resize& r) { return json{{"kind", "resize"}, {"scale", r.scale}}; },
            [](const Zoom& z) { return json{{"kind", "zoom"}, {"scale", z.scale}}; },
            [](const Rotate& r) { return json{{"kind", "rotate"}, {"degrees", r.degrees}}; },
            [](const CenterCrop& c) { return json{{"kind", "crop"}, {"size", c.size}}; },
            [](const BlurSharpen&) { return json{{"kind", "blur_sharpen"}}; },
            [](const JpegCompress& j) {
                return json{{"kind", "jpeg"}, {"quality", j.quality}, {"subsampling", subsampling_name(j.subsampling)}};
            },
        },
        spec);
}

PostProcessSpec parse_spec(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw ConfigError("operation record needs a string 'kind'");
    }
    const auto kind = j["kind"].get<std::string>();
    const std::string where = "operation '" + kind + "'";
    PostProcessSpec spec;
    if (kind == "median") {
        reject_unknown(j, {"kind", "window"}, where);
        spec = MedianFilter{field(j, "window", 3)};
    } else if (kind == "avg_blur") {
        reject_unknown(j, {"kind", "window"}, where);
        spec = AverageBlur{field(j, "window", 3)};
    } else if (kind == "gauss_noise") {
        reject_unknown(j, {"kind", "sigma", "unit"}, where);
        const auto unit = field<std::string>(j, "unit", "levels");
        if (unit != "levels" && unit != "normalized") throw ConfigError("noise unit must be levels or normalized");
        spec = GaussianNoise{field(j, "sigma", 0.0), unit == "levels" ? NoiseUnit::Levels : NoiseUnit::Normalized};
    } else if (kind == "gamma") {
        reject_unknown(j, {"kind", "gamma"}, where);
        spec = GammaCorrection{field(j, "gamma", 1.0)};
    } else if (kind == "clahe") {
        reject_unknown(j, {"kind", "clip_limit", "tile_rows", "tile_cols"}, where);
        spec = Clahe{field(j, "clip_limit", 1.0), field(j, "tile_rows", 8), field(j, "tile_cols", 8)};
    } else if (kind == "resize") {
        reject_unknown(j, {"kind", "scale"}, where);
        spec = Resize{field(j, "scale", 1.0)};
    } else if (kind == "zoom") {
        reject_unknown(j, {"kind", "scale"}, where);
        spec = Zoom{field(j, "scale", 1.0)};
    } else if (kind == "rotate") {
        reject_unknown(j, {"kind", "degrees"}, where);
        spec = Rotate{field(j, "degrees", 0.0)};
    } else if (kind == "crop") {
        reject_unknown(j, {"kind", "size"}, where);
        spec = CenterCrop{field(j, "size", 880)};
    } else if (kind == "blur_sharpen") {
        reject_unknown(j, {"kind"}, where);
        spec = BlurSharpen{};
    } else if (kind == "jpeg") {
        reject_unknown(j, {"kind", "quality", "subsampling"}, where);
        spec = JpegCompress{field(j, "quality", 95), parse_subsampling(field<std::string>(j, "subsampling", "4:2:0"))};
    } else {
        throw ConfigError("unknown operation kind '" + kind + "'");
    }
    validate(spec);
    return spec;
}

std::vector<PostProcessSpec> parse_grid(const json& j, const char* what,
                                        std::vector<PostProcessSpec> (*preset)()) {
    if (j.is_string()) {
        if (j.get<std::string>() == "paper") return preset();
        throw ConfigError(std::string(what) + ": unknown preset '" + j.get<std::string>() + "'");
    }
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be \"paper\" or a list of operation records");
    std::vector<PostProcessSpec> out;
    for (const auto& item : j) out.push_back(parse_spec(item));
    return out;
}

std::vector<int> parse_qf_grid(const json& j, const char* what) {
    if (j.is_string() && j.get<std::string>() == "paper") {
        return std::string_view(what) == "train_qf_grid" ? paper_train_qf_grid() : paper_eval_qf_grid();
    }
    try {
        return j.get<std::vector<int>>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(what) + " must be \"paper\" or a list of integers");
    }
}

json plan_object(const ExperimentPlan& plan, bool runtime) {
    json grid = json::array();
    for (const auto& s : plan.robustness_grid) grid.push_back(spec_object(s));
    json ops = json::array();
    for (const auto& s : plan.jpeg_robustness_operations) ops.push_back(spec_object(s));
    json training{{"learning_rate", plan.training.learning_rate},
                  {"momentum", plan.training.momentum},
                  {"batch_size", plan.training.batch_size},
                  {"epochs", plan.training.epochs}};
    if (plan.training.target_val_accuracy) training["target_val_accuracy"] = *plan.training.target_val_accuracy;
    json j{
        {"detector", std::string(to_string(plan.detector))},
        {"mode", std::string(to_string(plan.mode))},
        {"train_qf_grid", plan.train_qf_grid},
        {"eval_qf_grid", plan.eval_qf_grid},
        {"robustness_grid", grid},
        {"jpeg_robustness_operations", ops},
        {"images_per_class_per_condition", plan.images_per_class_per_condition},
        {"seed", plan.seed},
        {"offsets", {{"delta", offset_json(plan.offsets.delta)}, {"delta_cross", offset_json(plan.offsets.delta_cross)}}},
        {"normalization", std::string(to_string(plan.normalization))},
        {"jpeg_subsampling", subsampling_name(plan.jpeg_subsampling)},
        {"model",
         {{"conv_widths", plan.conv_widths},
          {"dense_width", plan.dense_width},
          {"input_gain", plan.model_config().input_gain}}},
        {"training", training},
    };
    if (runtime) {
        j["workers"] = plan.workers;
        j["train_when_missing"] = plan.train_when_missing;
        if (plan.cache_dir) j["cache_dir"] = plan.cache_dir->string();
    }
    return j;
}

const std::vector<std::string_view>& plan_keys() {
    static const std::vector<std::string_view> keys = {
        "detector",      "mode",          "train_qf_grid",  "eval_qf_grid",       "robustness_grid",
        "jpeg_robustness_operations",    "images_per_class_per_condition",    "seed", "offsets",
        "normalization", "jpeg_subsampling", "model",       "training",           "workers",
        "train_when_missing", "cache_dir", "manifest",      "checkpoint"};
    return keys;
}

ExperimentPlan parse_plan(const json& j) {
    if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
    reject_unknown(j, plan_keys(), "run configuration");
    ExperimentPlan plan;
    plan.detector = parse_detector(field<std::string>(j, "detector", "cross_conet"));
    plan.mode = parse_training_mode(field<std::string>(j, "mode", "unaware"));
    if (j.contains("train_qf_grid")) plan.train_qf_grid = parse_qf_grid(j["train_qf_grid"], "train_qf_grid");
    if (j.contains("eval_qf_grid")) plan.eval_qf_grid = parse_qf_grid(j["eval_qf_grid"], "eval_qf_grid");
    if (j.contains("robustness_grid")) {
        plan.robustness_grid = parse_grid(j["robustness_grid"], "robustness_grid", &paper_robustness_grid);
    }
    if (j.contains("jpeg_robustness_operations")) {
        plan.jpeg_robustness_operations =
            parse_grid(j["jpeg_robustness_operations"], "jpeg_robustness_operations", &paper_jpeg_robustness_operations);
    }
    plan.images_per_class_per_condition =
        field<std::size_t>(j, "images_per_class_per_condition", plan.images_per_class_per_condition);
    plan.seed = field<std::uint64_t>(j, "seed", 0);
    if (j.contains("offsets")) {
        const auto& o = j["offsets"];
        if (!o.is_object()) throw ConfigError("offsets must be an object");
        reject_unknown(o, {"delta", "delta_cross"}, "offsets");
        if (o.contains("delta")) plan.offsets.delta = parse_offset(o["delta"], "offsets.delta");
        if (o.contains("delta_cross")) plan.offsets.delta_cross = parse_offset(o["delta_cross"], "offsets.delta_cross");
    }
    plan.normalization = parse_normalization(field<std::string>(j, "normalization", "per-slice-sum"));
    plan.jpeg_subsampling = parse_subsampling(field<std::string>(j, "jpeg_subsampling", "4:2:0"));
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (!m.is_object()) throw ConfigError("model must be an object");
        reject_unknown(m, {"conv_widths", "dense_width", "input_gain"}, "model");
        plan.conv_widths = field(m, "conv_widths", plan.conv_widths);
        plan.dense_width = field(m, "dense_width", plan.dense_width);
        if (m.contains("input_gain")) plan.input_gain = field(m, "input_gain", 1.0);
    }
    if (j.contains("training")) {
        const auto& t = j["training"];
        if (!t.is_object()) throw ConfigError("training must be an object");
        reject_unknown(t, {"learning_rate", "momentum", "batch_size", "epochs", "target_val_accuracy"}, "training");
        plan.training.learning_rate = field(t, "learning_rate", plan.training.learning_rate);
        plan.training.momentum = field(t, "momentum", plan.training.momentum);
        plan.training.batch_size = field(t, "batch_size", plan.training.batch_size);
        plan.training.epochs = field(t, "epochs", plan.training.epochs);
        if (t.contains("target_val_accuracy")) plan.training.target_val_accuracy = field(t, "target_val_accuracy", 1.0);
    }
    plan.workers = field(j, "workers", plan.workers);
    plan.train_when_missing = field(j, "train_when_missing", plan.train_when_missing);
    if (j.contains("cache_dir")) plan.cache_dir = field<std::string>(j, "cache_dir", "");
    plan.validate();
    return plan;
}

json parse_json(std::string_view text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
}

}  // namespace

std::string spec_to_json(const PostProcessSpec& spec) {
    return spec_object(spec).dump();
}

PostProcessSpec spec_from_json(std::string_view text) {
    return parse_spec(parse_json(text, "operation record"));
}

std::string plan_to_json(const ExperimentPlan& plan, bool runtime) {
    return plan_object(plan, runtime).dump();
}

ExperimentPlan plan_from_json(std::string_view text) {
    return parse_plan(parse_json(text, "run configuration"));
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open run configuration");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json j = parse_json(buffer.str(), path.string());
    RunConfig config;
    config.plan = parse_plan(j);
    const auto base = path.parent_path();
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    if (j.contains("manifest")) config.manifest = resolve(field<std::string>(j, "manifest", ""));
    if (j.contains("checkpoint")) config.checkpoint = resolve(field<std::string>(j, "checkpoint", ""));
    if (config.plan.cache_dir && config.plan.cache_dir->is_relative()) {
        config.plan.cache_dir = base / *config.plan.cache_dir;
    }
    return config;
}

}  // namespace gandetect
