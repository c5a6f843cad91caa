#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsq/common.hpp"

namespace dsq {

struct HardwareProfile {
    std::string name;
    double peak_flops = 0.0;     // operations per second
    double mem_bandwidth = 0.0;  // bytes per second

    // peak compute per byte of DRAM traffic (the machine balance point)
    double flops_per_byte() const { return peak_flops / mem_bandwidth; }
    void validate() const;
};

// Decoder shape for one-token-at-a-time generation. ffn_dim is the interior
// width of a gated FFN (gate/up of ffn_dim x hidden, down of hidden x ffn_dim).
struct ModelShape {
    std::string name;
    uint32_t num_layers = 0;
    uint32_t hidden_dim = 0;
    uint32_t ffn_dim = 0;
    uint32_t num_heads = 0;
    uint32_t vocab_size = 0;
    uint32_t seq_len = 0;
    uint32_t weight_bits = 16;
    uint32_t activation_bits = 16; // fixed; activations stay FP16

    void validate() const;
};

enum class LayerKind { fully_connected, attention_matmul, other };

// Two counting conventions coexist, both used by the figures this module
// reproduces: arithmetic intensity divides flops by memory *element*
// accesses (a matvec is exactly 2 that way), while predicted_time divides
// bytes by bandwidth. One multiply-accumulate counts as 2 flops.
struct LayerCost {
    std::string name;
    LayerKind kind = LayerKind::other;
    double flops = 0.0;
    double weight_elems = 0.0;
    double activation_elems = 0.0;
    double weight_bytes = 0.0;
    double activation_bytes = 0.0;

    double total_bytes() const { return weight_bytes + activation_bytes; }
    double predicted_time(const HardwareProfile& hw) const;
    bool memory_bound(const HardwareProfile& hw) const;
};

// flops per memory element access
double arithmetic_intensity(const LayerCost& cost);

struct DecodeCosts {
    std::vector<LayerCost> layers;
    LayerCost total;                 // exact sum of the per-layer entries
    double weight_traffic_share = 0; // weight elems / all elems
};

// Average per-decode-step costs over an autoregressive generation of
// seq_len tokens starting from an empty KV cache (cache length averages
// (seq_len-1)/2). Weight bytes scale with weight_bits/8; activations and
// KV traffic stay at activation_bits.
DecodeCosts decode_step_costs(const ModelShape& shape, const HardwareProfile& hw);

struct RuntimePoint {
    uint32_t bits = 0;
    double seconds = 0.0;
    double normalized = 0.0; // relative to 16-bit
};

// Predicted decode-step time per weight bitwidth, normalized to 16-bit.
std::vector<RuntimePoint> predicted_runtime_curve(const ModelShape& shape,
                                                  const HardwareProfile& hw,
                                                  const std::vector<uint32_t>& bit_list);

// least-squares R^2 of an affine fit time(bits) = a + b*bits
double affine_fit_r2(const std::vector<RuntimePoint>& pts);

// JSON config files (see data/ for the stock profiles and shapes)
HardwareProfile load_hardware_profile(const std::string& path);
ModelShape load_model_shape(const std::string& path);

} // namespace dsq
