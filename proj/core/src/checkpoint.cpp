#include "drumscribe/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "drumscribe/detail/binary_io.hpp"
#include "drumscribe/errors.hpp"

namespace drumscribe {

namespace {

std::string encode_config(const std::map<std::string, std::string>& config) {
    std::string blob;
    for (const auto& [k, v] : config) {
        blob += k;
        blob += '=';
        blob += v;
        blob += '\n';
    }
    return blob;
}

std::map<std::string, std::string> decode_config(const std::string& blob,
                                                 const std::string& path) {
    std::map<std::string, std::string> config;
    std::istringstream in(blob);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ": malformed checkpoint config line '" + line + "'");
        config[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return config;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    if (ckpt.arch_id < kArchVit || ckpt.arch_id > kArchRnn)
        throw FormatError("cannot save checkpoint with unknown arch id " +
                          std::to_string(ckpt.arch_id));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    detail::write_bytes(out, "DRTR", 4);
    const uint8_t version = 1;
    detail::write_bytes(out, &version, 1);
    detail::write_bytes(out, &ckpt.arch_id, 1);

    const std::string blob = encode_config(ckpt.config);
    detail::write_u32(out, static_cast<uint32_t>(blob.size()));
    detail::write_bytes(out, blob.data(), blob.size());

    detail::write_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        detail::write_u16(out, static_cast<uint16_t>(name.size()));
        detail::write_bytes(out, name.data(), name.size());
        const uint8_t rank = static_cast<uint8_t>(tensor.rank());
        detail::write_bytes(out, &rank, 1);
        for (int i = 0; i < tensor.rank(); ++i)
            detail::write_u32(out, static_cast<uint32_t>(tensor.dim(i)));
        for (int64_t i = 0; i < tensor.size(); ++i) detail::write_f32(out, tensor(i));
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[4];
    detail::read_bytes(in, magic, 4, "checkpoint magic");
    if (std::string_view(magic, 4) != "DRTR")
        throw FormatError(path.string() + ": not a DRTR checkpoint");
    uint8_t version;
    detail::read_bytes(in, &version, 1, "checkpoint version");
    if (version != 1)
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));

    Checkpoint ckpt;
    detail::read_bytes(in, &ckpt.arch_id, 1, "arch id");
    if (ckpt.arch_id < kArchVit || ckpt.arch_id > kArchRnn)
        throw FormatError(path.string() + ": unknown architecture id " +
                          std::to_string(ckpt.arch_id));

    const uint32_t blob_len = detail::read_u32(in, "config length");
    std::string blob(blob_len, '\0');
    detail::read_bytes(in, blob.data(), blob_len, "config blob");
    ckpt.config = decode_config(blob, path.string());

    const uint32_t n_tensors = detail::read_u32(in, "tensor count");
    ckpt.tensors.reserve(n_tensors);
    for (uint32_t t = 0; t < n_tensors; ++t) {
        const uint16_t name_len = detail::read_u16(in, "tensor name length");
        std::string name(name_len, '\0');
        detail::read_bytes(in, name.data(), name_len, "tensor name");
        uint8_t rank;
        detail::read_bytes(in, &rank, 1, "tensor rank");
        if (rank == 0) throw FormatError(path.string() + ": tensor '" + name + "' has rank 0");
        Shape shape(rank);
        for (uint8_t i = 0; i < rank; ++i) {
            const uint32_t dim = detail::read_u32(in, "tensor dim");
            if (dim == 0)
                throw FormatError(path.string() + ": tensor '" + name + "' has a zero extent");
            shape[i] = static_cast<int64_t>(dim);
        }
        Tensor<float> tensor = Tensor<float>::zeros(shape);
        for (int64_t i = 0; i < tensor.size(); ++i) tensor(i) = detail::read_f32(in, "tensor data");
        ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
    }
    return ckpt;
}

}  // namespace drumscribe
