#include "dsq/pipeline.hpp"

#include <algorithm>

namespace dsq {

QuantizedLayer quantize_layer(const WeightMatrix& matrix, const SensitivityMap& sens,
                              const QuantizeOptions& opt, QuantizeStats* stats) {
    matrix.validate();
    sens.validate();
    check(sens.rows == matrix.rows && sens.cols == matrix.cols, errc::shape_mismatch,
          matrix.name + ": sensitivity map shape mismatch");

    const Decomposition dec = decompose(matrix, sens.values, opt.cfg);
    const ChannelwiseResult cw =
        quantize_channelwise(matrix, sens.values, opt.cfg, dec.mask, opt.method);

    QuantizedLayer layer;
    layer.name = matrix.name;
    layer.rows = matrix.rows;
    layer.cols = matrix.cols;
    layer.packed = pack(cw.assignment, cw.codebooks, opt.cfg.bits, matrix.rows,
                        matrix.cols, cw.groups_per_row);

    // sparse deltas: original minus the lut[0] the packed index contributes
    layer.sparse = dec.sparse;
    for (uint32_t r = 0; r < layer.sparse.rows; ++r) {
        for (uint32_t p = layer.sparse.row_ptr[r]; p < layer.sparse.row_ptr[r + 1]; ++p) {
            const float lut0 = layer.packed.lut_at(r, layer.sparse.col_idx[p])[0];
            layer.sparse.values[p] -= lut0;
        }
    }

    layer.hybrid_top_k = std::min<uint32_t>(opt.hybrid_top_k, matrix.rows);
    layer.hybrid = hybrid_split(layer.sparse, layer.hybrid_top_k);
    layer.avg_bits = average_bits(layer);
    layer.validate();

    if (stats) {
        stats->weighted_objective = cw.weighted_objective;
        stats->unweighted_mse = cw.unweighted_mse_sum;
        stats->sensitive_count = dec.sensitive_count;
        stats->outlier_count = dec.outlier_count;
        stats->avg_bits = layer.avg_bits;
    }
    return layer;
}

WeightMatrix dequantize_layer(const QuantizedLayer& layer) {
    layer.validate();
    const AssignmentVector assign = unpack(layer.packed);

    WeightMatrix m;
    m.name = layer.name;
    m.rows = layer.rows;
    m.cols = layer.cols;
    m.values.resize(size_t(layer.rows) * layer.cols);
    for (uint32_t r = 0; r < layer.rows; ++r) {
        for (uint32_t c = 0; c < layer.cols; ++c) {
            const size_t i = size_t(r) * layer.cols + c;
            m.values[i] = layer.packed.lut_at(r, c)[assign[i]];
        }
    }
    for (uint32_t r = 0; r < layer.sparse.rows; ++r) {
        for (uint32_t p = layer.sparse.row_ptr[r]; p < layer.sparse.row_ptr[r + 1]; ++p) {
            const size_t i = size_t(r) * layer.cols + layer.sparse.col_idx[p];
            // packed index at an extracted position is 0, so the represented
            // value is lut[0] + delta
            m.values[i] = layer.packed.lut_at(r, layer.sparse.col_idx[p])[0] +
                          layer.sparse.values[p];
        }
    }
    m.validate();
    return m;
}

} // namespace dsq
