#include "dsq/roofline.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace dsq {

void HardwareProfile::validate() const {
    check(peak_flops > 0.0 && mem_bandwidth > 0.0, errc::invalid_argument,
          "hardware profile: throughput and bandwidth must be positive");
}

void ModelShape::validate() const {
    check(num_layers >= 1 && hidden_dim >= 1 && ffn_dim >= 1 && num_heads >= 1 &&
              vocab_size >= 1 && seq_len >= 1,
          errc::invalid_argument, "model shape: dims must be positive");
    check(hidden_dim % num_heads == 0, errc::invalid_argument,
          "model shape: hidden_dim must divide by num_heads");
    check(weight_bits >= 2 && weight_bits <= 16, errc::invalid_argument,
          "model shape: weight_bits must be in 2..16");
}

double LayerCost::predicted_time(const HardwareProfile& hw) const {
    return std::max(flops / hw.peak_flops, total_bytes() / hw.mem_bandwidth);
}

bool LayerCost::memory_bound(const HardwareProfile& hw) const {
    return total_bytes() / hw.mem_bandwidth >= flops / hw.peak_flops;
}

double arithmetic_intensity(const LayerCost& cost) {
    const double mem_elems = cost.weight_elems + cost.activation_elems;
    check(cost.flops > 0.0, errc::invalid_argument, "arithmetic_intensity: zero-flop layer");
    check(mem_elems > 0.0, errc::invalid_argument, "arithmetic_intensity: zero memory ops");
    return cost.flops / mem_elems;
}

// ---------------------------------------------------------------------------
// decode-step cost model
// ---------------------------------------------------------------------------

namespace {

LayerCost fc_cost(const std::string& name, double out_dim, double in_dim,
                  double count, double wbits, double abits) {
    LayerCost c;
    c.name = name;
    c.kind = LayerKind::fully_connected;
    const double weights = out_dim * in_dim * count;
    c.flops = 2.0 * weights;
    c.weight_elems = weights;
    c.activation_elems = (in_dim + out_dim) * count;
    c.weight_bytes = weights * wbits / 8.0;
    c.activation_bytes = c.activation_elems * abits / 8.0;
    return c;
}

} // namespace

DecodeCosts decode_step_costs(const ModelShape& shape, const HardwareProfile& hw) {
    shape.validate();
    hw.validate();

    const double L = shape.num_layers;
    const double h = shape.hidden_dim;
    const double f = shape.ffn_dim;
    const double abits = shape.activation_bits;
    const double wbits = shape.weight_bits;
    // mean KV-cache length while generating seq_len tokens from scratch
    const double kv_len = (double(shape.seq_len) - 1.0) / 2.0;

    DecodeCosts dc;
    dc.layers.push_back(fc_cost("qkv_proj", 3.0 * h, h, L, wbits, abits));
    dc.layers.push_back(fc_cost("out_proj", h, h, L, wbits, abits));
    dc.layers.push_back(fc_cost("ffn_gate", f, h, L, wbits, abits));
    dc.layers.push_back(fc_cost("ffn_up", f, h, L, wbits, abits));
    dc.layers.push_back(fc_cost("ffn_down", h, f, L, wbits, abits));
    dc.layers.push_back(fc_cost("lm_head", shape.vocab_size, h, 1.0, wbits, abits));

    {
        // attention score and context products against the cached keys/values
        LayerCost c;
        c.name = "attn_kv";
        c.kind = LayerKind::attention_matmul;
        c.flops = 4.0 * h * kv_len * L;          // score + context, 2 flops per MAC
        c.activation_elems = (2.0 * h * kv_len   // K and V cache reads
                              + 2.0 * h          // K and V cache appends
                              + 2.0 * double(shape.num_heads) * kv_len) * // scores r/w
                             L;
        c.activation_bytes = c.activation_elems * abits / 8.0;
        dc.layers.push_back(c);
    }
    {
        // norms, residual adds, nonlinearities, embedding row read, logits
        LayerCost c;
        c.name = "other";
        c.kind = LayerKind::other;
        c.flops = (10.0 * h + 2.0 * f) * L + double(shape.vocab_size);
        c.activation_elems = (10.0 * h + 2.0 * f) * L + h + double(shape.vocab_size);
        c.activation_bytes = c.activation_elems * abits / 8.0;
        dc.layers.push_back(c);
    }

    LayerCost& t = dc.total;
    t.name = "total";
    for (const auto& c : dc.layers) {
        t.flops += c.flops;
        t.weight_elems += c.weight_elems;
        t.activation_elems += c.activation_elems;
        t.weight_bytes += c.weight_bytes;
        t.activation_bytes += c.activation_bytes;
    }
    dc.weight_traffic_share = t.weight_elems / (t.weight_elems + t.activation_elems);
    return dc;
}

std::vector<RuntimePoint> predicted_runtime_curve(const ModelShape& shape,
                                                  const HardwareProfile& hw,
                                                  const std::vector<uint32_t>& bit_list) {
    ModelShape s16 = shape;
    s16.weight_bits = 16;
    double base = 0.0;
    {
        const DecodeCosts dc = decode_step_costs(s16, hw);
        for (const auto& c : dc.layers) base += c.predicted_time(hw);
    }

    std::vector<RuntimePoint> pts;
    for (uint32_t b : bit_list) {
        check(b >= 2 && b <= 16, errc::invalid_argument, "runtime curve: bits must be in 2..16");
        ModelShape s = shape;
        s.weight_bits = b;
        const DecodeCosts dc = decode_step_costs(s, hw);
        RuntimePoint p;
        p.bits = b;
        for (const auto& c : dc.layers) p.seconds += c.predicted_time(hw);
        p.normalized = p.seconds / base;
        pts.push_back(p);
    }
    return pts;
}

double affine_fit_r2(const std::vector<RuntimePoint>& pts) {
    check(pts.size() >= 3, errc::invalid_argument, "affine fit: need >= 3 points");
    const double n = double(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sx += p.bits;
        sy += p.normalized;
        sxx += double(p.bits) * p.bits;
        sxy += double(p.bits) * p.normalized;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (const auto& p : pts) {
        const double fit = intercept + slope * p.bits;
        ss_res += (p.normalized - fit) * (p.normalized - fit);
        ss_tot += (p.normalized - mean) * (p.normalized - mean);
    }
    if (ss_tot == 0.0) return 1.0; // flat curve fits itself
    return 1.0 - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// config files
// ---------------------------------------------------------------------------

HardwareProfile load_hardware_profile(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), errc::missing_file, "cannot open hardware profile: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::malformed_header, path + ": " + e.what());
    }
    HardwareProfile hw;
    hw.name = j.at("name").get<std::string>();
    hw.peak_flops = j.at("peak_flops").get<double>();
    hw.mem_bandwidth = j.at("mem_bandwidth_bytes_per_s").get<double>();
    hw.validate();
    return hw;
}

ModelShape load_model_shape(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), errc::missing_file, "cannot open model shape: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::malformed_header, path + ": " + e.what());
    }
    ModelShape s;
    s.name = j.at("name").get<std::string>();
    s.num_layers = j.at("num_layers").get<uint32_t>();
    s.hidden_dim = j.at("hidden_dim").get<uint32_t>();
    s.ffn_dim = j.at("ffn_dim").get<uint32_t>();
    s.num_heads = j.at("num_heads").get<uint32_t>();
    s.vocab_size = j.at("vocab_size").get<uint32_t>();
    s.seq_len = j.value("seq_len", 128u);
    s.weight_bits = j.value("weight_bits", 16u);
    s.validate();
    return s;
}

} // namespace dsq
