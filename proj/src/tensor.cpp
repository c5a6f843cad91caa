#include "dsq/tensor.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace dsq {

static constexpr char kTensorMagic[4] = {'D', 'S', 'Q', 'T'};
static constexpr uint32_t kDtypeF32 = 1;

void WeightMatrix::validate() const {
    check(rows >= 1 && cols >= 1, errc::empty_dimension,
          name + ": dimensions must be >= 1");
    check(values.size() == size_t(rows) * cols, errc::shape_mismatch,
          name + ": value count does not match rows*cols");
    for (float v : values) {
        check(is_finite(v), errc::non_finite_value, name + ": non-finite value");
    }
}

WeightMatrix make_matrix(std::string name, uint32_t rows, uint32_t cols, std::vector<float> values) {
    WeightMatrix m;
    m.name = std::move(name);
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    m.validate();
    return m;
}

void GradientSampleSet::validate() const {
    check(!samples.empty(), errc::empty_input, matrix_name + ": no gradient samples");
    const size_t n = size_t(rows) * cols;
    for (const auto& s : samples) {
        check(s.size() == n, errc::shape_mismatch,
              matrix_name + ": gradient sample shape mismatch");
        for (float v : s) {
            check(is_finite(v), errc::non_finite_value,
                  matrix_name + ": non-finite gradient entry");
        }
    }
}

// ---------------------------------------------------------------------------
// raw tensor i/o
// ---------------------------------------------------------------------------

namespace {

uint64_t read_u64_le(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

uint32_t read_u32_le(const unsigned char* p) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void write_u64_le(unsigned char* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void write_u32_le(unsigned char* p, uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

} // namespace

WeightMatrix load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), errc::missing_file, "cannot open tensor file: " + path);

    unsigned char header[24];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    check(in.gcount() == sizeof(header), errc::malformed_header,
          path + ": truncated header");
    check(std::memcmp(header, kTensorMagic, 4) == 0, errc::malformed_header,
          path + ": bad magic");
    const uint32_t dtype = read_u32_le(header + 4);
    check(dtype == kDtypeF32, errc::malformed_header,
          path + ": unsupported dtype code " + std::to_string(dtype));
    const uint64_t rows = read_u64_le(header + 8);
    const uint64_t cols = read_u64_le(header + 16);
    check(rows >= 1 && cols >= 1, errc::empty_dimension, path + ": zero dimension");
    check(rows <= std::numeric_limits<uint32_t>::max() &&
          cols <= std::numeric_limits<uint32_t>::max() &&
          rows <= std::numeric_limits<uint64_t>::max() / cols / 4,
          errc::dimension_overflow, path + ": dimension overflow");

    const uint64_t count = rows * cols;
    // declared dims * element width must equal payload length exactly
    in.seekg(0, std::ios::end);
    const uint64_t file_size = static_cast<uint64_t>(in.tellg());
    check(file_size == 24 + count * 4, errc::truncated_payload,
          path + ": payload length does not match header dims");
    in.seekg(24, std::ios::beg);

    WeightMatrix m;
    m.name = path;
    m.rows = static_cast<uint32_t>(rows);
    m.cols = static_cast<uint32_t>(cols);
    m.values.resize(count);
    static_assert(sizeof(float) == 4);
    in.read(reinterpret_cast<char*>(m.values.data()), std::streamsize(count * 4));
    check(in.gcount() == std::streamsize(count * 4), errc::truncated_payload,
          path + ": short read");
    m.validate();
    return m;
}

void save_weights(const WeightMatrix& m, const std::string& path) {
    m.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(out.good(), errc::io_failure, "cannot open for write: " + path);

    unsigned char header[24];
    std::memcpy(header, kTensorMagic, 4);
    write_u32_le(header + 4, kDtypeF32);
    write_u64_le(header + 8, m.rows);
    write_u64_le(header + 16, m.cols);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(m.values.data()),
              std::streamsize(m.values.size() * 4));
    check(out.good(), errc::io_failure, "write failed: " + path);
}

GradientSampleSet load_gradient_samples(const std::string& matrix_name,
                                        uint32_t rows, uint32_t cols,
                                        const std::vector<std::string>& paths) {
    GradientSampleSet gs;
    gs.matrix_name = matrix_name;
    gs.rows = rows;
    gs.cols = cols;
    for (const auto& p : paths) {
        WeightMatrix g = load_weights(p);
        check(g.rows == rows && g.cols == cols, errc::shape_mismatch,
              p + ": gradient shape does not match " + matrix_name);
        gs.samples.push_back(std::move(g.values));
    }
    gs.validate();
    return gs;
}

} // namespace dsq
