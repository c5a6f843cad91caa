#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsq/dns.hpp"
#include "dsq/nuq.hpp"

namespace dsq {

// Bit-packed assignment indices with per-channel (or per-group) lookup
// tables. Indices are written LSB-first in column order; each row is padded
// to a byte boundary so rows stay independently addressable. Pad bits are
// zero. See docs/FORMATS.md for the exact layout.
struct PackedDense {
    uint32_t bits = 0;
    uint32_t rows = 0;
    uint32_t cols = 0;
    uint32_t groups_per_row = 1;
    std::vector<float> luts;       // rows * groups_per_row * 2^bits centroids
    std::vector<uint8_t> payload;  // rows * row_stride_bytes

    uint32_t levels() const { return 1u << bits; }
    uint32_t group_cols() const { return cols / groups_per_row; }
    size_t row_stride() const { return (size_t(cols) * bits + 7) / 8; }

    const float* lut_at(uint32_t row, uint32_t col) const {
        const size_t g = size_t(row) * groups_per_row + col / group_cols();
        return luts.data() + g * levels();
    }
    void validate() const;
};

PackedDense pack(const AssignmentVector& assign,
                 const std::vector<Codebook>& codebooks,
                 uint32_t bits, uint32_t rows, uint32_t cols,
                 uint32_t groups_per_row = 1);

// Exact inverse of pack for in-range indices (masked sentinels were packed
// as index 0 and come back as 0). strict rejects nonzero pad bits.
AssignmentVector unpack(const PackedDense& packed, bool strict = true);

// Fully assembled quantized layer: packed dense part, sparse remainder in
// CSR, and the hybrid execution split of that remainder.
//
// Mask semantics: positions extracted into `sparse` are packed with dense
// index 0, and the CSR value there is the delta (original - lut[0]) so the
// fused product needs no separate mask stream.
struct QuantizedLayer {
    std::string name;
    uint32_t rows = 0;
    uint32_t cols = 0;
    PackedDense packed;
    CsrMatrix sparse;     // delta values at extracted positions
    HybridSplit hybrid;
    uint32_t hybrid_top_k = 0;
    double avg_bits = 0.0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// average-bits accounting
//
// Charged storage per layer:
//   indices   rows * row_stride * 8            (row padding included)
//   LUTs      16 bits per centroid entry
//   CSR       16 per value + 16 per column index + 32 per row-pointer entry
// avg_bits = total / (rows * cols); compression rate = 16 / avg_bits.
// ---------------------------------------------------------------------------

struct LayerBitStats {
    uint64_t weight_count = 0;
    uint64_t total_bits = 0;
    double avg_bits() const { return double(total_bits) / double(weight_count); }
    double compression_rate() const { return 16.0 / avg_bits(); }
};

// Formula-level accounting from dimensions alone (no materialized payload);
// group_size 0 means channel-wise.
LayerBitStats layer_bit_stats(uint32_t rows, uint32_t cols, uint32_t bits,
                              uint32_t group_size, uint64_t nnz);

double average_bits(const QuantizedLayer& layer);

// Whole-model figure: total stored bits over total weights.
double average_bits(const std::vector<LayerBitStats>& layers);

} // namespace dsq
