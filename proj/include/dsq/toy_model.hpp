#pragma once

#include <cstdint>
#include <vector>

#include "dsq/sensitivity.hpp"
#include "dsq/tensor.hpp"

namespace dsq {

// Small two-layer network (dense, tanh, dense) with a mean-squared-error
// loss. It exists to produce genuine loss gradients and measurable loss
// perturbations for quantization experiments; all math runs in double so
// gradients can be checked against central finite differences.
// The interior layer carries most of the weights, as in the transformer
// blocks the quantizer targets; the small head keeps final-layer effects
// from dominating whole-model comparisons.
struct ToyModelConfig {
    uint32_t d_in = 256;
    uint32_t d_hidden = 128;
    uint32_t d_out = 24;
    uint64_t seed = 1;
};

struct ToyDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    size_t size() const { return inputs.size(); }
};

class ToyModel {
public:
    // Heavy-tailed random weights and anisotropic input feature scales,
    // deterministic for a given config. The scale spread gives weights
    // genuinely heterogeneous sensitivity, like trained projection layers.
    static ToyModel random(const ToyModelConfig& cfg);

    const ToyModelConfig& config() const { return cfg_; }

    std::vector<double> forward(const std::vector<double>& x) const;

    // mean over samples of (1/d_out) * squared output error
    double loss(const ToyDataset& ds) const;

    // gradients of one sample's loss w.r.t. both weight matrices
    void sample_gradients(const std::vector<double>& x, const std::vector<double>& y,
                          std::vector<double>& g1, std::vector<double>& g2) const;

    // layer 0 = fc1 (d_hidden x d_in), layer 1 = fc2 (d_out x d_hidden)
    WeightMatrix export_weights(int layer) const;
    void import_weights(int layer, const WeightMatrix& m);

    // inputs reaching the given layer, for the activation-based sensitivity
    std::vector<std::vector<float>> layer_inputs(const ToyDataset& ds, int layer,
                                                 size_t n) const;

    std::vector<double> w1, w2;
    // Input feature model: correlated features driven by a small set of
    // shared factors plus per-feature noise, with lognormal per-feature
    // scales. Correlation is what gives weights within one channel
    // genuinely different loss sensitivity at equal activation size.
    std::vector<double> input_scales;
    std::vector<double> factor_mix; // d_in x num_factors loadings
    uint32_t num_factors = 3;

private:
    ToyModelConfig cfg_;
};

// inputs drawn N(0,1); targets are the teacher's outputs plus optional
// N(0, noise_sigma^2) noise (noise 0 puts the teacher at a zero-loss point)
ToyDataset make_dataset(const ToyModel& teacher, size_t n, uint64_t seed,
                        double noise_sigma = 0.0);

// first n per-sample loss gradients for the given layer
GradientSampleSet toy_gradients(const ToyModel& model, const ToyDataset& ds,
                                int layer, size_t n);

} // namespace dsq
