#include "dsq/ablate.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cmath>

namespace dsq {

ToyExperiment::ToyExperiment(uint64_t seed, uint32_t num_grad_samples) {
    ToyModelConfig cfg;
    cfg.seed = seed;
    model_ = ToyModel::random(cfg);
    // round to the f32 weights the quantizer sees, so the baseline loss on
    // the held-out set is exactly zero
    base_[0] = model_.export_weights(0);
    base_[1] = model_.export_weights(1);
    model_.import_weights(0, base_[0]);
    model_.import_weights(1, base_[1]);

    // Measurement targets come from a nearby teacher, so residuals are
    // systematic and correlated with the activations the way they are for
    // a trained-but-not-exactly-converged model. Pure target noise would
    // make the Fisher collapse to a noisy activation profile.
    // The teacher differs from the student by a small offset concentrated
    // along the first input factor: the residual of a nearly-converged
    // model is systematic and input-correlated, not white.
    ToyModel teacher = model_;
    {
        const double eps = std::getenv("DSQ_TE") ? atof(std::getenv("DSQ_TE")) : 0.1;
        const double diffuse = std::getenv("DSQ_TD") ? atof(std::getenv("DSQ_TD")) : 0.02;
        Rng trng(seed * 7919 + 3);
        const auto& tc = teacher.config();
        std::vector<double> v(tc.d_in);
        double vn = 0.0;
        for (uint32_t c = 0; c < tc.d_in; ++c) {
            v[c] = teacher.input_scales[c] * teacher.factor_mix[size_t(c) * teacher.num_factors];
            vn += v[c] * v[c];
        }
        vn = std::sqrt(vn);
        const double wscale = 1.0 / std::sqrt(double(tc.d_in));
        for (uint32_t r = 0; r < tc.d_hidden; ++r) {
            const double u = trng.normal();
            for (uint32_t c = 0; c < tc.d_in; ++c) {
                teacher.w1[size_t(r) * tc.d_in + c] += eps * wscale * u * v[c] / vn;
            }
        }
        for (auto& w : teacher.w1) w += diffuse * std::abs(w) * trng.normal();
        for (auto& w : teacher.w2) w += diffuse * std::abs(w) * trng.normal();
    }
    ToyDataset measure = make_dataset(model_, num_grad_samples, seed * 977 + 11, 0.0);
    for (size_t i = 0; i < measure.size(); ++i) {
        measure.targets[i] = teacher.forward(measure.inputs[i]);
    }
    for (int layer = 0; layer < 2; ++layer) {
        fisher_[layer] = fisher_diagonal(toy_gradients(model_, measure, layer, num_grad_samples));
        const auto acts = model_.layer_inputs(measure, layer, num_grad_samples);
        activation_[layer] = activation_sensitivity(base_[layer].name, base_[layer].rows,
                                                    base_[layer].cols, acts);
    }
    // held-out inputs, same task: loss perturbation is measured against the
    // task loss, not against the model's own outputs
    eval_set_ = make_dataset(model_, 256, seed * 31 + 7, 0.0);
    for (size_t i = 0; i < eval_set_.size(); ++i) {
        eval_set_.targets[i] = teacher.forward(eval_set_.inputs[i]);
    }
}

AblationRecord ToyExperiment::evaluate(const ToyQuantSpec& spec,
                                       const std::string& config_id) const {
    AblationRecord rec;
    rec.config_id = config_id;

    ToyModel quantized = model_;
    uint64_t total_bits = 0, total_weights = 0;
    for (int layer = 0; layer < 2; ++layer) {
        QuantizeOptions opt;
        opt.cfg.bits = spec.bits;
        opt.cfg.sensitive_fraction = spec.sensitive_fraction;
        opt.cfg.outlier_fraction = spec.outlier_fraction;
        opt.cfg.group_size = spec.group_div == 0 ? 0 : base_[layer].cols / spec.group_div;
        opt.method = spec.method;

        // the weighting choice is the whole framework: it selects the
        // sensitivity metric for extraction and clustering alike
        const SensitivityMap& sens = spec.weighting == ClusterWeighting::activation
                                         ? activation_[layer]
                                         : fisher_[layer];
        const QuantizedLayer q = quantize_layer(base_[layer], sens, opt, nullptr);
        const WeightMatrix wq = dequantize_layer(q);

        // report the Eq-style Fisher-weighted error of the realized weights
        for (size_t i = 0; i < wq.values.size(); ++i) {
            const double d = double(base_[layer].values[i]) - double(wq.values[i]);
            rec.weighted_objective += double(fisher_[layer].values[i]) * d * d;
            rec.unweighted_mse += d * d;
        }
        quantized.import_weights(layer, wq);

        const LayerBitStats s = layer_bit_stats(q.rows, q.cols, q.packed.bits,
                                                opt.cfg.group_size, q.sparse.nnz());
        total_bits += s.total_bits;
        total_weights += s.weight_count;
    }
    rec.avg_bits = double(total_bits) / double(total_weights);
    rec.loss_perturbation = quantized.loss(eval_set_) - model_.loss(eval_set_);
    return rec;
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

AblationReport run_ablation(const std::string& suite, uint64_t seed) {
    AblationReport rep;
    rep.suite = suite;
    rep.seed = seed;
    const ToyExperiment exp(seed);

    auto add = [&](const ToyQuantSpec& spec, const std::string& id) {
        rep.records.push_back(exp.evaluate(spec, id));
    };

    if (suite == "sensitivity") {
        // {RTN, unweighted k-means, Fisher-weighted k-means} x sparsity level
        const double sens_frac[3] = {0.0, 0.0005, 0.0005};
        const double out_frac[3] = {0.0, 0.0, 0.004};
        const char* sparsity_id[3] = {"0%", "0.05%", "0.45%"};
        const CodebookMethod methods[3] = {CodebookMethod::rtn,
                                           CodebookMethod::unweighted_kmeans,
                                           CodebookMethod::weighted_kmeans};
        const char* method_id[3] = {"rtn", "kmeans", "fisher-kmeans"};
        for (int m = 0; m < 3; ++m) {
            for (int s = 0; s < 3; ++s) {
                ToyQuantSpec spec;
                spec.method = methods[m];
                spec.sensitive_fraction = sens_frac[s];
                spec.outlier_fraction = out_frac[s];
                add(spec, std::string(method_id[m]) + "/" + sparsity_id[s]);
            }
        }
    } else if (suite == "sparsity") {
        // sensitive-value fraction sweep, no outliers
        const double fracs[5] = {0.0, 0.0005, 0.001, 0.0015, 0.002};
        const char* ids[5] = {"0%", "0.05%", "0.10%", "0.15%", "0.20%"};
        for (int i = 0; i < 5; ++i) {
            ToyQuantSpec spec;
            spec.sensitive_fraction = fracs[i];
            add(spec, std::string("sensitive/") + ids[i]);
        }
    } else if (suite == "grouping") {
        // grouping vs dense-and-sparse trade-off
        {
            ToyQuantSpec spec;
            spec.group_div = 2;
            add(spec, "grouped/cols2");
        }
        {
            ToyQuantSpec spec;
            spec.group_div = 4;
            add(spec, "grouped/cols4");
        }
        {
            ToyQuantSpec spec;
            spec.group_div = 2;
            spec.sensitive_fraction = 0.0005;
            add(spec, "grouped/cols2+0.05%");
        }
        {
            ToyQuantSpec spec;
            add(spec, "dns/0%");
        }
        {
            ToyQuantSpec spec;
            spec.sensitive_fraction = 0.0005;
            add(spec, "dns/0.05%");
        }
        {
            ToyQuantSpec spec;
            spec.sensitive_fraction = 0.0005;
            spec.outlier_fraction = 0.004;
            add(spec, "dns/0.45%");
        }
    } else if (suite == "obd-obs") {
        // final-loss (Fisher) vs layer-output (activation^2) weighting
        const double out_frac[3] = {0.0, 0.002, 0.004};
        const char* out_id[3] = {"0%", "0.20%", "0.40%"};
        for (int w = 0; w < 2; ++w) {
            for (int s = 0; s < 3; ++s) {
                ToyQuantSpec spec;
                spec.sensitive_fraction = 0.0005;
                spec.outlier_fraction = out_frac[s];
                spec.weighting = w == 0 ? ClusterWeighting::fisher
                                        : ClusterWeighting::activation;
                add(spec, std::string(w == 0 ? "obd" : "obs") + "/outliers-" + out_id[s]);
            }
        }
    } else {
        fail(errc::invalid_argument, "unknown ablation suite: " + suite);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// report rendering (stable formatting keeps fixed-seed runs byte-identical)
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

std::string report_tsv(const AblationReport& r) {
    std::string out = "# suite\t" + r.suite + "\n# seed\t" + std::to_string(r.seed) + "\n";
    out += "config\tweighted_objective\tunweighted_mse\tloss_perturbation\tavg_bits\n";
    for (const auto& rec : r.records) {
        out += rec.config_id + "\t" + fmt(rec.weighted_objective) + "\t" +
               fmt(rec.unweighted_mse) + "\t" + fmt(rec.loss_perturbation) + "\t" +
               fmt(rec.avg_bits) + "\n";
    }
    return out;
}

std::string report_json(const AblationReport& r) {
    std::string out = "{\n  \"suite\": \"" + r.suite + "\",\n  \"seed\": " +
                      std::to_string(r.seed) + ",\n  \"records\": [\n";
    for (size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        out += "    {\"config\": \"" + rec.config_id +
               "\", \"weighted_objective\": " + fmt(rec.weighted_objective) +
               ", \"unweighted_mse\": " + fmt(rec.unweighted_mse) +
               ", \"loss_perturbation\": " + fmt(rec.loss_perturbation) +
               ", \"avg_bits\": " + fmt(rec.avg_bits) + "}";
        out += (i + 1 < r.records.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

} // namespace dsq
