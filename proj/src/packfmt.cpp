#include "dsq/packfmt.hpp"

#include <algorithm>

namespace dsq {

void PackedDense::validate() const {
    check(bits >= 1 && bits <= 8, errc::invalid_argument, "packed: bits must be in 1..8");
    check(rows >= 1 && cols >= 1, errc::empty_dimension, "packed: empty dims");
    check(cols % groups_per_row == 0, errc::shape_mismatch,
          "packed: groups_per_row must divide cols");
    check(luts.size() == size_t(rows) * groups_per_row * levels(), errc::shape_mismatch,
          "packed: lut table size mismatch");
    check(payload.size() == size_t(rows) * row_stride(), errc::shape_mismatch,
          "packed: payload size mismatch");
}

PackedDense pack(const AssignmentVector& assign,
                 const std::vector<Codebook>& codebooks,
                 uint32_t bits, uint32_t rows, uint32_t cols,
                 uint32_t groups_per_row) {
    check(bits >= 1 && bits <= 8, errc::invalid_argument, "pack: bits must be in 1..8");
    check(assign.size() == size_t(rows) * cols, errc::shape_mismatch,
          "pack: assignment size mismatch");
    check(codebooks.size() == size_t(rows) * groups_per_row, errc::shape_mismatch,
          "pack: codebook count mismatch");

    PackedDense p;
    p.bits = bits;
    p.rows = rows;
    p.cols = cols;
    p.groups_per_row = groups_per_row;
    const uint32_t k = p.levels();
    p.luts.reserve(codebooks.size() * k);
    for (const auto& cb : codebooks) {
        check(cb.centroids.size() == k, errc::shape_mismatch, "pack: codebook length != 2^bits");
        p.luts.insert(p.luts.end(), cb.centroids.begin(), cb.centroids.end());
    }

    const size_t stride = p.row_stride();
    p.payload.assign(size_t(rows) * stride, 0);
    for (uint32_t r = 0; r < rows; ++r) {
        uint8_t* out = p.payload.data() + size_t(r) * stride;
        size_t bitpos = 0;
        for (uint32_t c = 0; c < cols; ++c) {
            uint16_t idx = assign[size_t(r) * cols + c];
            if (idx == kMaskedIndex) idx = 0; // sparse path owns this position
            check(idx < k, errc::invalid_argument, "pack: index overflow");
            for (uint32_t b = 0; b < bits; ++b, ++bitpos) {
                if ((idx >> b) & 1u) out[bitpos >> 3] |= uint8_t(1u << (bitpos & 7));
            }
        }
    }
    return p;
}

AssignmentVector unpack(const PackedDense& packed, bool strict) {
    packed.validate();
    const size_t stride = packed.row_stride();
    AssignmentVector assign(size_t(packed.rows) * packed.cols);
    for (uint32_t r = 0; r < packed.rows; ++r) {
        const uint8_t* in = packed.payload.data() + size_t(r) * stride;
        size_t bitpos = 0;
        for (uint32_t c = 0; c < packed.cols; ++c) {
            uint16_t idx = 0;
            for (uint32_t b = 0; b < packed.bits; ++b, ++bitpos) {
                idx |= uint16_t(((in[bitpos >> 3] >> (bitpos & 7)) & 1u) << b);
            }
            assign[size_t(r) * packed.cols + c] = idx;
        }
        if (strict) {
            // pad bits of every row must be zero
            for (; bitpos < stride * 8; ++bitpos) {
                check(((in[bitpos >> 3] >> (bitpos & 7)) & 1u) == 0,
                      errc::truncated_payload, "unpack: nonzero pad bits");
            }
        }
    }
    return assign;
}

void QuantizedLayer::validate() const {
    check(!name.empty(), errc::invalid_argument, "layer: empty name");
    packed.validate();
    sparse.validate();
    check(packed.rows == rows && packed.cols == cols, errc::shape_mismatch,
          name + ": packed dims mismatch");
    check(sparse.rows == rows && sparse.cols == cols, errc::shape_mismatch,
          name + ": sparse dims mismatch");
    check(hybrid.dense_row_ids.size() == std::min<size_t>(hybrid_top_k, rows),
          errc::shape_mismatch, name + ": hybrid split size mismatch");
}

// ---------------------------------------------------------------------------
// accounting
// ---------------------------------------------------------------------------

LayerBitStats layer_bit_stats(uint32_t rows, uint32_t cols, uint32_t bits,
                              uint32_t group_size, uint64_t nnz) {
    check(group_size == 0 || cols % group_size == 0, errc::invalid_argument,
          "accounting: group_size must divide cols");
    LayerBitStats s;
    s.weight_count = uint64_t(rows) * cols;

    // 16-bit passthrough: raw half-precision storage, nothing else
    if (bits == 16) {
        s.total_bits = s.weight_count * 16;
        return s;
    }
    check(bits >= 1 && bits <= 8, errc::invalid_argument, "accounting: bits must be in 1..8 or 16");

    const uint64_t groups_per_row = group_size == 0 ? 1 : cols / group_size;
    const uint64_t row_stride = (uint64_t(cols) * bits + 7) / 8;
    s.total_bits += uint64_t(rows) * row_stride * 8;                     // indices + pad
    s.total_bits += uint64_t(rows) * groups_per_row * (1u << bits) * 16; // LUT entries
    if (nnz > 0) {
        s.total_bits += nnz * (16 + 16);           // CSR values + column indices
        s.total_bits += (uint64_t(rows) + 1) * 32; // CSR row pointers
    }
    return s;
}

double average_bits(const QuantizedLayer& layer) {
    LayerBitStats s = layer_bit_stats(layer.rows, layer.cols, layer.packed.bits,
                                      layer.packed.groups_per_row == 1
                                          ? 0
                                          : layer.cols / layer.packed.groups_per_row,
                                      layer.sparse.nnz());
    return s.avg_bits();
}

double average_bits(const std::vector<LayerBitStats>& layers) {
    uint64_t bits = 0, weights = 0;
    for (const auto& l : layers) {
        bits += l.total_bits;
        weights += l.weight_count;
    }
    check(weights > 0, errc::empty_input, "accounting: no layers");
    return double(bits) / double(weights);
}

} // namespace dsq
