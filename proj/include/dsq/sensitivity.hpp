#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsq/common.hpp"
#include "dsq/tensor.hpp"

namespace dsq {

// Per-weight nonnegative importance, same shape and order as its matrix.
struct SensitivityMap {
    std::string matrix_name;
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<float> values;

    void validate() const;
};

// Diagonal Fisher approximation: out[i] = (1/|D|) * sum_d g_d[i]^2.
// Samples accumulate in ascending sample order for each weight.
SensitivityMap fisher_diagonal(const GradientSampleSet& grads);

// Per-column mean of squared input activations, broadcast to every row
// (the layer-output-preserving alternative used for ablations).
SensitivityMap activation_sensitivity(const std::string& matrix_name,
                                      uint32_t rows, uint32_t cols,
                                      const std::vector<std::vector<float>>& acts);

// uniform map (weight 1 everywhere) for sensitivity-agnostic runs
SensitivityMap uniform_sensitivity(const std::string& matrix_name,
                                   uint32_t rows, uint32_t cols);

} // namespace dsq
