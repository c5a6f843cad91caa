#pragma once

#include <cstdint>
#include <vector>

#include "dsq/nuq.hpp"
#include "dsq/tensor.hpp"

namespace dsq {

// Compressed sparse row storage. Column indices are 16-bit by design, which
// caps cols at 65535 (enforced at construction; matches the accounting that
// charges 16 bits per column index).
struct CsrMatrix {
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<uint32_t> row_ptr; // rows + 1
    std::vector<uint16_t> col_idx; // strictly increasing within each row
    std::vector<float> values;

    uint32_t nnz() const { return row_ptr.empty() ? 0 : row_ptr.back(); }
    uint32_t row_nnz(uint32_t r) const { return row_ptr[r + 1] - row_ptr[r]; }
    void validate() const;
};

// Builds a CSR matrix from (row, col, value) triplets sorted by (row, col).
CsrMatrix csr_from_triplets(uint32_t rows, uint32_t cols,
                            const std::vector<uint32_t>& trip_rows,
                            const std::vector<uint32_t>& trip_cols,
                            const std::vector<float>& trip_vals);

// Result of splitting W into a compact-range dense part and a full-precision
// sparse part holding top-sensitive weights and magnitude outliers.
struct Decomposition {
    WeightMatrix dense;          // extracted positions zeroed
    std::vector<uint8_t> mask;   // 1 where extracted; |mask| == nnz(sparse)
    CsrMatrix sparse;            // original values at extracted positions
    float t_min = 0.0f;          // min of the unmarked weights
    float t_max = 0.0f;          // max of the unmarked weights
    uint32_t sensitive_count = 0;
    uint32_t outlier_count = 0;
};

// Marks ceil(sensitive_fraction*N) weights of highest sensitivity, then
// ceil(outlier_fraction*N) of largest magnitude among the rest. Ties break by
// (row, col) ascending. A weight in both sets is counted once, as sensitive.
Decomposition decompose(const WeightMatrix& matrix, const std::vector<float>& sens,
                        const QuantConfig& cfg);

// Exact inverse: mask positions carry the sparse value, others the dense value.
WeightMatrix reconstruct(const Decomposition& d);

// Promotion of the top_k rows with the most nonzeros (ties: lower row first)
// into dense full-precision form, leaving a residual CSR without them.
struct HybridSplit {
    std::vector<uint32_t> dense_row_ids;
    std::vector<float> promoted_rows; // dense_row_ids.size() * cols, row-major
    CsrMatrix residual;
    uint32_t cols = 0;
};

HybridSplit hybrid_split(const CsrMatrix& sparse, uint32_t top_k);

} // namespace dsq
