#pragma once

#include <cstdint>
#include <vector>

#include "dsq/common.hpp"
#include "dsq/tensor.hpp"

namespace dsq {

// Sentinel assignment index for positions extracted into the sparse part.
// The packer writes these as index 0; the execution path adds a sparse delta
// on top so the final value is unaffected (see kernels.hpp).
inline constexpr uint16_t kMaskedIndex = 0xFFFF;

// Sorted-ascending table of representative values. Duplicate centroids can
// occur when a channel has fewer distinct values than table entries.
struct Codebook {
    std::vector<float> centroids;

    size_t size() const { return centroids.size(); }
    void validate() const;
};

using AssignmentVector = std::vector<uint16_t>;

struct QuantConfig {
    uint32_t bits = 3;                 // 2..8
    double sensitive_fraction = 0.0005;
    double outlier_fraction = 0.004;
    uint32_t group_size = 0;           // 0 = channel-wise, else divisor of cols
    uint32_t kmeans_max_iters = 100;
    double kmeans_tol = 1e-6;          // relative centroid movement
    uint64_t seed = 0;

    uint32_t levels() const { return 1u << bits; }
    void validate() const;
};

struct KmeansResult {
    Codebook codebook;
    AssignmentVector assignment;
    double objective = 0.0;  // weighted SSE at convergence
    uint32_t iterations = 0;
};

struct KmeansOptions {
    uint32_t max_iters = 100;
    double tol = 1e-6;
    bool zero_weight_fallback = true;    // substitute uniform weights if all zero
    bool check_monotone = false;         // assert per-iteration objective descent
};

// Lloyd weighted 1-D k-means with weighted-quantile initialization.
// Assignment ties go to the lower centroid index; empty clusters steal the
// value with the largest weighted squared distance from its current centroid.
KmeansResult weighted_kmeans_1d(const std::vector<float>& values,
                                const std::vector<float>& weights,
                                uint32_t k, const KmeansOptions& opt = {});

// weighted SSE of `values` against the nearest centroid of `cb`
double weighted_objective(const std::vector<float>& values,
                          const std::vector<float>& weights,
                          const Codebook& cb);

struct DpOracleResult {
    Codebook codebook;
    double objective = 0.0;
};

// Exact 1-D weighted k-means via interval dynamic programming on the sorted
// order (optimal clusters are contiguous intervals). Test-scale only.
inline constexpr size_t kDpOracleMaxN = 4096;
DpOracleResult dp_kmeans_oracle(const std::vector<float>& values,
                                const std::vector<float>& weights, uint32_t k);

// Round-to-nearest uniform baseline: 2^bits equally spaced levels spanning
// [min, max]; ties round half up.
struct RtnResult {
    Codebook codebook;
    AssignmentVector assignment;
};
RtnResult rtn_uniform(const std::vector<float>& values, uint32_t bits);

// ---------------------------------------------------------------------------
// channel-wise quantization
// ---------------------------------------------------------------------------

struct ChannelwiseResult {
    // one codebook per row (group_size == 0) or per (row, column-group)
    std::vector<Codebook> codebooks;
    AssignmentVector assignment;       // rows*cols; masked positions carry kMaskedIndex
    uint32_t groups_per_row = 1;
    double weighted_objective = 0.0;   // summed over all groups
    double unweighted_mse_sum = 0.0;   // plain SSE over quantized positions

    const Codebook& codebook_at(uint32_t row, uint32_t col, uint32_t cols) const {
        const uint32_t group_cols = cols / groups_per_row;
        return codebooks[size_t(row) * groups_per_row + col / group_cols];
    }
};

enum class CodebookMethod { weighted_kmeans, unweighted_kmeans, rtn };

// One codebook per output channel (or per column group). `mask` marks
// positions already extracted into the sparse part; they are excluded from
// clustering and assigned kMaskedIndex. Pass an empty mask for none.
ChannelwiseResult quantize_channelwise(const WeightMatrix& matrix,
                                       const std::vector<float>& sens,
                                       const QuantConfig& cfg,
                                       const std::vector<uint8_t>& mask = {},
                                       CodebookMethod method = CodebookMethod::weighted_kmeans);

} // namespace dsq
