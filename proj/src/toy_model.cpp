#include "dsq/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace {

// smooth gate: softplus with beta 4, derivative sigmoid(4z)
inline double gate_act(double z) {
    const double t = 4.0 * z;
    return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) * 0.25;
}
inline double gate_deriv(double z) {
    const double t = 4.0 * z;
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

namespace dsq {

ToyModel ToyModel::random(const ToyModelConfig& cfg) {
    ToyModel m;
    m.cfg_ = cfg;
    Rng rng(cfg.seed);
    // keeps pre-activations in tanh's mildly nonlinear range under the
    // lognormal input scales below
    const double g1 = std::getenv("DSQ_G1") ? atof(std::getenv("DSQ_G1")) : 0.45;
    const double s1 = g1 / std::sqrt(double(cfg.d_in));
    const double s2 = 1.0 / std::sqrt(double(cfg.d_hidden));
    m.w1.resize(size_t(cfg.d_hidden) * cfg.d_in);
    m.w2.resize(size_t(cfg.d_out) * cfg.d_hidden);
    // heavy-tailed weights: matches the outlier-bearing distributions the
    // quantizer is built for
    for (auto& w : m.w1) w = rng.student_t(4.0) * s1;
    for (auto& w : m.w2) w = rng.student_t(4.0) * s2;
    // lognormal per-feature scales and unit-norm factor loadings
    m.input_scales.resize(cfg.d_in);
    for (auto& s : m.input_scales) s = std::exp(0.7 * rng.normal());
    m.factor_mix.resize(size_t(cfg.d_in) * m.num_factors);
    for (uint32_t c = 0; c < cfg.d_in; ++c) {
        double norm2 = 0.0;
        for (uint32_t j = 0; j < m.num_factors; ++j) {
            const double b = rng.normal();
            m.factor_mix[size_t(c) * m.num_factors + j] = b;
            norm2 += b * b;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (uint32_t j = 0; j < m.num_factors; ++j) {
            m.factor_mix[size_t(c) * m.num_factors + j] *= inv;
        }
    }
    return m;
}

std::vector<double> ToyModel::forward(const std::vector<double>& x) const {
    check(x.size() == cfg_.d_in, errc::shape_mismatch, "toy forward: input length");
    std::vector<double> a1(cfg_.d_hidden);
    for (uint32_t r = 0; r < cfg_.d_hidden; ++r) {
        double acc = 0.0;
        const double* row = w1.data() + size_t(r) * cfg_.d_in;
        for (uint32_t c = 0; c < cfg_.d_in; ++c) acc += row[c] * x[c];
        a1[r] = gate_act(acc);
    }
    std::vector<double> out(cfg_.d_out);
    for (uint32_t r = 0; r < cfg_.d_out; ++r) {
        double acc = 0.0;
        const double* row = w2.data() + size_t(r) * cfg_.d_hidden;
        for (uint32_t c = 0; c < cfg_.d_hidden; ++c) acc += row[c] * a1[c];
        out[r] = acc;
    }
    return out;
}

double ToyModel::loss(const ToyDataset& ds) const {
    check(ds.size() > 0, errc::empty_input, "toy loss: empty dataset");
    double total = 0.0;
    for (size_t i = 0; i < ds.size(); ++i) {
        const std::vector<double> out = forward(ds.inputs[i]);
        double e = 0.0;
        for (uint32_t r = 0; r < cfg_.d_out; ++r) {
            const double d = out[r] - ds.targets[i][r];
            e += d * d;
        }
        total += e / cfg_.d_out;
    }
    return total / double(ds.size());
}

void ToyModel::sample_gradients(const std::vector<double>& x, const std::vector<double>& y,
                                std::vector<double>& g1, std::vector<double>& g2) const {
    // forward, keeping intermediates
    std::vector<double> z1(cfg_.d_hidden), a1(cfg_.d_hidden);
    for (uint32_t r = 0; r < cfg_.d_hidden; ++r) {
        double acc = 0.0;
        const double* row = w1.data() + size_t(r) * cfg_.d_in;
        for (uint32_t c = 0; c < cfg_.d_in; ++c) acc += row[c] * x[c];
        z1[r] = acc;
        a1[r] = gate_act(acc);
    }
    std::vector<double> out(cfg_.d_out);
    for (uint32_t r = 0; r < cfg_.d_out; ++r) {
        double acc = 0.0;
        const double* row = w2.data() + size_t(r) * cfg_.d_hidden;
        for (uint32_t c = 0; c < cfg_.d_hidden; ++c) acc += row[c] * a1[c];
        out[r] = acc;
    }

    // backprop through the MSE loss (1/d_out) * ||out - y||^2
    std::vector<double> dz2(cfg_.d_out);
    for (uint32_t r = 0; r < cfg_.d_out; ++r) {
        dz2[r] = 2.0 * (out[r] - y[r]) / cfg_.d_out;
    }
    g2.assign(size_t(cfg_.d_out) * cfg_.d_hidden, 0.0);
    for (uint32_t r = 0; r < cfg_.d_out; ++r) {
        for (uint32_t c = 0; c < cfg_.d_hidden; ++c) {
            g2[size_t(r) * cfg_.d_hidden + c] = dz2[r] * a1[c];
        }
    }
    std::vector<double> da1(cfg_.d_hidden, 0.0);
    for (uint32_t r = 0; r < cfg_.d_out; ++r) {
        const double* row = w2.data() + size_t(r) * cfg_.d_hidden;
        for (uint32_t c = 0; c < cfg_.d_hidden; ++c) da1[c] += row[c] * dz2[r];
    }
    g1.assign(size_t(cfg_.d_hidden) * cfg_.d_in, 0.0);
    for (uint32_t r = 0; r < cfg_.d_hidden; ++r) {
        const double dz1 = da1[r] * gate_deriv(z1[r]);
        for (uint32_t c = 0; c < cfg_.d_in; ++c) {
            g1[size_t(r) * cfg_.d_in + c] = dz1 * x[c];
        }
    }
}

WeightMatrix ToyModel::export_weights(int layer) const {
    check(layer == 0 || layer == 1, errc::invalid_argument, "toy: layer must be 0 or 1");
    WeightMatrix m;
    if (layer == 0) {
        m.name = "fc1";
        m.rows = cfg_.d_hidden;
        m.cols = cfg_.d_in;
        m.values.assign(w1.begin(), w1.end());
    } else {
        m.name = "fc2";
        m.rows = cfg_.d_out;
        m.cols = cfg_.d_hidden;
        m.values.assign(w2.begin(), w2.end());
    }
    m.validate();
    return m;
}

void ToyModel::import_weights(int layer, const WeightMatrix& m) {
    check(layer == 0 || layer == 1, errc::invalid_argument, "toy: layer must be 0 or 1");
    m.validate();
    if (layer == 0) {
        check(m.rows == cfg_.d_hidden && m.cols == cfg_.d_in, errc::shape_mismatch,
              "toy: fc1 shape mismatch");
        w1.assign(m.values.begin(), m.values.end());
    } else {
        check(m.rows == cfg_.d_out && m.cols == cfg_.d_hidden, errc::shape_mismatch,
              "toy: fc2 shape mismatch");
        w2.assign(m.values.begin(), m.values.end());
    }
}

std::vector<std::vector<float>> ToyModel::layer_inputs(const ToyDataset& ds, int layer,
                                                       size_t n) const {
    check(layer == 0 || layer == 1, errc::invalid_argument, "toy: layer must be 0 or 1");
    n = std::min(n, ds.size());
    std::vector<std::vector<float>> acts;
    acts.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (layer == 0) {
            acts.emplace_back(ds.inputs[i].begin(), ds.inputs[i].end());
        } else {
            std::vector<float> a1(cfg_.d_hidden);
            for (uint32_t r = 0; r < cfg_.d_hidden; ++r) {
                double acc = 0.0;
                const double* row = w1.data() + size_t(r) * cfg_.d_in;
                for (uint32_t c = 0; c < cfg_.d_in; ++c) acc += row[c] * ds.inputs[i][c];
                a1[r] = static_cast<float>(gate_act(acc));
            }
            acts.push_back(std::move(a1));
        }
    }
    return acts;
}

ToyDataset make_dataset(const ToyModel& teacher, size_t n, uint64_t seed,
                        double noise_sigma) {
    Rng rng(seed);
    ToyDataset ds;
    ds.inputs.reserve(n);
    ds.targets.reserve(n);
    const uint32_t d_in = teacher.config().d_in;
    const uint32_t nf = teacher.num_factors;
    // x_c = s_c * (factor part + noise part), unit variance before scaling
    const double noise_mix = 0.35;
    const double factor_gain = std::sqrt(1.0 - noise_mix * noise_mix);
    std::vector<double> f(nf);
    for (size_t i = 0; i < n; ++i) {
        for (auto& v : f) v = rng.normal();
        std::vector<double> x(d_in);
        for (uint32_t c = 0; c < d_in; ++c) {
            double fac = 0.0;
            for (uint32_t j = 0; j < nf; ++j) {
                fac += teacher.factor_mix[size_t(c) * nf + j] * f[j];
            }
            x[c] = teacher.input_scales[c] * (factor_gain * fac + noise_mix * rng.normal());
        }
        std::vector<double> y = teacher.forward(x);
        if (noise_sigma > 0.0) {
            for (auto& t : y) t += noise_sigma * rng.normal();
        }
        ds.targets.push_back(std::move(y));
        ds.inputs.push_back(std::move(x));
    }
    return ds;
}

GradientSampleSet toy_gradients(const ToyModel& model, const ToyDataset& ds,
                                int layer, size_t n) {
    check(n >= 1, errc::invalid_argument, "toy_gradients: n must be >= 1");
    check(ds.size() >= n, errc::invalid_argument, "toy_gradients: dataset too small");

    GradientSampleSet gs;
    const auto& cfg = model.config();
    if (layer == 0) {
        gs.matrix_name = "fc1";
        gs.rows = cfg.d_hidden;
        gs.cols = cfg.d_in;
    } else {
        gs.matrix_name = "fc2";
        gs.rows = cfg.d_out;
        gs.cols = cfg.d_hidden;
    }
    std::vector<double> g1, g2;
    for (size_t i = 0; i < n; ++i) {
        model.sample_gradients(ds.inputs[i], ds.targets[i], g1, g2);
        const std::vector<double>& g = (layer == 0) ? g1 : g2;
        gs.samples.emplace_back(g.begin(), g.end());
    }
    gs.validate();
    return gs;
}

} // namespace dsq
