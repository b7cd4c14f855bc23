#include "gandetect/checkpoint.hpp"

#include <fstream>

#include "gandetect/binary_io.hpp"
#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

std::string describe(const ModelConfig& c) {
    std::string s = "in=" + std::to_string(c.in_channels) + " side=" + std::to_string(c.input_size) + " widths=";
    for (std::size_t k = 0; k < c.conv_widths.size(); ++k) {
        s += (k ? "," : "") + std::to_string(c.conv_widths[k]);
    }
    return s + " dense=" + std::to_string(c.dense_width) + " gain=" + std::to_string(c.input_gain);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams<float>& params, const std::string& train_fingerprint) {
    const ModelConfig& c = params.config();
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    binary::put_uint<std::uint32_t>(out, kCheckpointVersion);
    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.in_channels));
    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.input_size));
    for (int w : c.conv_widths) binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.dense_width));
    binary::put_f64(out, c.input_gain);
    binary::put_string(out, train_fingerprint);

    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.slots().size()));
    for (const auto& slot : params.slots()) {
        binary::put_string(out, slot.name);
        binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(slot.shape.size()));
        for (int d : slot.shape) binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (const float v : params.values()) binary::put_f32(out, v);
    for (const float v : params.velocity()) binary::put_f32(out, v);
    if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in, const std::optional<ModelConfig>& expected) {
    try {
        std::array<char, 8> magic{};
        if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
            throw CheckpointError("not a checkpoint file (bad magic)");
        }
        const auto version = binary::get_uint<std::uint32_t>(in);
        if (version != kCheckpointVersion) {
            throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
        }
        ModelConfig config;
        config.in_channels = static_cast<int>(binary::get_uint<std::uint32_t>(in));
        config.input_size = static_cast<int>(binary::get_uint<std::uint32_t>(in));
        for (int& w : config.conv_widths) w = static_cast<int>(binary::get_uint<std::uint32_t>(in));
        config.dense_width = static_cast<int>(binary::get_uint<std::uint32_t>(in));
        config.input_gain = binary::get_f64(in);
        try {
            config.validate();
        } catch (const ConfigError& e) {
            throw CheckpointError(std::string("checkpoint holds an invalid configuration: ") + e.what());
        }
        if (expected && !(*expected == config)) {
            throw ShapeError("checkpoint configuration (" + describe(config) + ") does not match the requested model (" +
                             describe(*expected) + ")");
        }

        Checkpoint ckpt{ModelParams<float>(config), binary::get_string(in)};
        const auto count = binary::get_uint<std::uint32_t>(in);
        const auto& slots = ckpt.params.slots();
        if (count != slots.size()) throw CheckpointError("checkpoint layer table has the wrong length");
        for (const auto& slot : slots) {
            const auto name = binary::get_string(in);
            const auto rank = binary::get_uint<std::uint32_t>(in);
            if (name != slot.name || rank != slot.shape.size()) {
                throw CheckpointError("checkpoint layer table entry '" + name + "' does not match '" + slot.name + "'");
            }
            for (int d : slot.shape) {
                if (binary::get_uint<std::uint32_t>(in) != static_cast<std::uint32_t>(d)) {
                    throw CheckpointError("checkpoint tensor '" + name + "' has unexpected dimensions");
                }
            }
        }
        for (float& v : ckpt.params.values()) v = binary::get_f32(in);
        for (float& v : ckpt.params.velocity()) v = binary::get_f32(in);
        return ckpt;
    } catch (const std::ios_base::failure&) {
        throw CheckpointError("truncated checkpoint");
    }
}

void save_model(const std::filesystem::path& path, const ModelParams<float>& params,
                const std::string& train_fingerprint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
    write_checkpoint(out, params, train_fingerprint);
}

Checkpoint load_model(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(path.string() + ": cannot open checkpoint");
    return read_checkpoint(in, expected);
}

}  // namespace gandetect
