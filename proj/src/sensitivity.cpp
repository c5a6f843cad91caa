#include "dsq/sensitivity.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsq {

void SensitivityMap::validate() const {
    check(values.size() == size_t(rows) * cols, errc::shape_mismatch,
          matrix_name + ": sensitivity shape mismatch");
    for (float v : values) {
        check(is_finite(v) && v >= 0.0f, errc::non_finite_value,
              matrix_name + ": sensitivity entries must be finite and >= 0");
    }
}

SensitivityMap fisher_diagonal(const GradientSampleSet& grads) {
    grads.validate();
    const size_t n = size_t(grads.rows) * grads.cols;
    const double inv = 1.0 / double(grads.num_samples());

    SensitivityMap map;
    map.matrix_name = grads.matrix_name;
    map.rows = grads.rows;
    map.cols = grads.cols;
    map.values.resize(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < int64_t(n); ++i) {
        double acc = 0.0;
        for (size_t d = 0; d < grads.samples.size(); ++d) {
            const double g = grads.samples[d][i];
            acc += g * g;
        }
        map.values[i] = static_cast<float>(acc * inv);
    }
    return map;
}

SensitivityMap activation_sensitivity(const std::string& matrix_name,
                                      uint32_t rows, uint32_t cols,
                                      const std::vector<std::vector<float>>& acts) {
    check(!acts.empty(), errc::empty_input, matrix_name + ": no activation samples");
    for (const auto& a : acts) {
        check(a.size() == cols, errc::shape_mismatch,
              matrix_name + ": activation length mismatch");
    }

    std::vector<float> col_weight(cols);
    const double inv = 1.0 / double(acts.size());
    for (uint32_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (const auto& a : acts) {
            const double x = a[c];
            acc += x * x;
        }
        col_weight[c] = static_cast<float>(acc * inv);
    }

    SensitivityMap map;
    map.matrix_name = matrix_name;
    map.rows = rows;
    map.cols = cols;
    map.values.resize(size_t(rows) * cols);
    for (uint32_t r = 0; r < rows; ++r) {
        for (uint32_t c = 0; c < cols; ++c) {
            map.values[size_t(r) * cols + c] = col_weight[c];
        }
    }
    return map;
}

SensitivityMap uniform_sensitivity(const std::string& matrix_name,
                                   uint32_t rows, uint32_t cols) {
    SensitivityMap map;
    map.matrix_name = matrix_name;
    map.rows = rows;
    map.cols = cols;
    map.values.assign(size_t(rows) * cols, 1.0f);
    return map;
}

} // namespace dsq
