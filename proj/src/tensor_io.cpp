#include <algorithm>
#include <fstream>
#include <string>

#include "gandetect/binary_io.hpp"
#include "gandetect/cooccurrence.hpp"
#include "gandetect/errors.hpp"

namespace gandetect {

void write_tensor(const CooccurrenceTensor& tensor, std::ostream& out) {
    out.write(kTensorMagic.data(), kTensorMagic.size());
    binary::put_uint<std::uint8_t>(out, kTensorVersion);
    binary::put_uint<std::uint32_t>(out, CooccurrenceTensor::kSide);
    binary::put_uint<std::uint32_t>(out, CooccurrenceTensor::kSide);
    binary::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.channels()));
    binary::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.normalization()));
    for (const double v : tensor.values()) binary::put_f64(out, v);
    if (!out) throw Error("failed writing co-occurrence tensor");
}

CooccurrenceTensor read_tensor(std::istream& in) {
    try {
        std::array<char, 8> magic{};
        if (!in.read(magic.data(), magic.size()) || magic != kTensorMagic) {
            throw CheckpointError("not a co-occurrence tensor file (bad magic)");
        }
        const auto version = binary::get_uint<std::uint8_t>(in);
        if (version != kTensorVersion) {
            throw CheckpointError("unsupported tensor file version " + std::to_string(version));
        }
        const auto rows = binary::get_uint<std::uint32_t>(in);
        const auto cols = binary::get_uint<std::uint32_t>(in);
        const auto channels = binary::get_uint<std::uint32_t>(in);
        const auto tag = binary::get_uint<std::uint8_t>(in);
        if (rows != CooccurrenceTensor::kSide || cols != CooccurrenceTensor::kSide ||
            (channels != 3 && channels != 6)) {
            throw CheckpointError("tensor file has unsupported shape " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + "x" + std::to_string(channels));
        }
        if (tag > static_cast<std::uint8_t>(Normalization::PerSliceSum)) {
            throw CheckpointError("tensor file has unknown normalization tag");
        }
        CooccurrenceTensor tensor(static_cast<int>(channels), static_cast<Normalization>(tag));
        for (double& v : tensor.values()) v = binary::get_f64(in);
        return tensor;
    } catch (const std::ios_base::failure&) {
        throw CheckpointError("truncated co-occurrence tensor file");
    }
}

void save_tensor(const CooccurrenceTensor& tensor, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    write_tensor(tensor, out);
}

CooccurrenceTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(path.string() + ": cannot open tensor file");
    return read_tensor(in);
}

}  // namespace gandetect
