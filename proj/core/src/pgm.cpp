#include "drumscribe/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "drumscribe/errors.hpp"

namespace drumscribe {

void write_pgm(const Tensor<float>& values, const std::filesystem::path& path) {
    if (values.rank() != 2)
        throw ShapeError("write_pgm: want a rank-2 matrix, got " + shape_str(values.shape()));
    const int64_t rows = values.dim(0);
    const int64_t cols = values.dim(1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << cols << " " << rows << "\n255\n";
    for (int64_t r = rows - 1; r >= 0; --r)
        for (int64_t c = 0; c < cols; ++c) {
            const float v = std::clamp(values(r, c), 0.0f, 1.0f);
            const unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0f));
            out.put(static_cast<char>(byte));
        }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace drumscribe
