#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsq/common.hpp"

namespace dsq {

// 2-D full-precision weight tensor, row-major. rows = output channels,
// cols = input features. Values are always finite.
struct WeightMatrix {
    std::string name;
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<float> values; // rows * cols, row-major

    float at(uint32_t r, uint32_t c) const { return values[size_t(r) * cols + c]; }
    float& at(uint32_t r, uint32_t c) { return values[size_t(r) * cols + c]; }
    size_t size() const { return values.size(); }

    void validate() const;
};

WeightMatrix make_matrix(std::string name, uint32_t rows, uint32_t cols, std::vector<float> values);

// Per-sample loss gradients for one weight matrix.
struct GradientSampleSet {
    std::string matrix_name;
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<std::vector<float>> samples; // each rows*cols, row-major

    size_t num_samples() const { return samples.size(); }
    void validate() const;
};

// ---------------------------------------------------------------------------
// Raw tensor file format (see docs/FORMATS.md).
//
//   offset  size  field
//        0     4  magic "DSQT"
//        4     4  dtype code (u32 LE; 1 = float32)
//        8     8  rows (u64 LE)
//       16     8  cols (u64 LE)
//       24     -  payload: rows*cols little-endian IEEE-754 values, row-major
//
// The file length must equal 24 + rows*cols*width exactly.
// ---------------------------------------------------------------------------

WeightMatrix load_weights(const std::string& path);
void save_weights(const WeightMatrix& m, const std::string& path);

// Loads one gradient sample file per entry of `paths` (all must match `shape`).
GradientSampleSet load_gradient_samples(const std::string& matrix_name,
                                        uint32_t rows, uint32_t cols,
                                        const std::vector<std::string>& paths);

} // namespace dsq
