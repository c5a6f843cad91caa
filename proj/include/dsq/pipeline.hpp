#pragma once

#include <string>
#include <vector>

#include "dsq/container.hpp"
#include "dsq/dns.hpp"
#include "dsq/nuq.hpp"
#include "dsq/packfmt.hpp"
#include "dsq/sensitivity.hpp"

namespace dsq {

struct QuantizeOptions {
    QuantConfig cfg;
    uint32_t hybrid_top_k = 10;
    CodebookMethod method = CodebookMethod::weighted_kmeans;
};

struct QuantizeStats {
    double weighted_objective = 0.0; // sum of per-group weighted SSE
    double unweighted_mse = 0.0;
    uint32_t sensitive_count = 0;
    uint32_t outlier_count = 0;
    double avg_bits = 0.0;
};

// Full path for one matrix: decompose into dense+sparse, cluster the dense
// remainder channel-wise, bit-pack, and re-express the sparse values as
// deltas against lut[0] so the fused kernel needs no mask. `sens` drives
// both sensitive-value extraction and the clustering weights.
QuantizedLayer quantize_layer(const WeightMatrix& matrix, const SensitivityMap& sens,
                              const QuantizeOptions& opt, QuantizeStats* stats = nullptr);

// Dequantized dense matrix represented by the layer (LUT values everywhere,
// extracted positions resolve to lut[0] + delta).
WeightMatrix dequantize_layer(const QuantizedLayer& layer);

} // namespace dsq
