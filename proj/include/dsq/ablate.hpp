#pragma once

#include <string>
#include <vector>

#include "dsq/pipeline.hpp"
#include "dsq/toy_model.hpp"

namespace dsq {

// One quantization configuration evaluated on the toy model. The weighted
// objective is always the Fisher-weighted squared reconstruction error of
// the whole model, regardless of which weights drove the clustering, so
// rows are directly comparable. Loss perturbation L(W_Q) - L(W) on a
// held-out set is the perplexity stand-in.
struct AblationRecord {
    std::string config_id;
    double weighted_objective = 0.0;
    double unweighted_mse = 0.0;
    double loss_perturbation = 0.0;
    double avg_bits = 0.0;
};

struct AblationReport {
    std::string suite;
    uint64_t seed = 0;
    std::vector<AblationRecord> records;
};

// suite: sensitivity | sparsity | grouping | obd-obs
AblationReport run_ablation(const std::string& suite, uint64_t seed);

std::string report_tsv(const AblationReport& r);
std::string report_json(const AblationReport& r);

// ---------------------------------------------------------------------------
// building blocks, exposed for the acceptance suite
// ---------------------------------------------------------------------------

enum class ClusterWeighting { fisher, activation, uniform };

struct ToyQuantSpec {
    uint32_t bits = 3;
    double sensitive_fraction = 0.0;
    double outlier_fraction = 0.0;
    uint32_t group_div = 0; // 0 = channel-wise, else group_size = cols / group_div
    CodebookMethod method = CodebookMethod::weighted_kmeans;
    ClusterWeighting weighting = ClusterWeighting::fisher;
};

// Deterministic toy-model experiment context for one seed: the f32-rounded
// model, Fisher and activation sensitivity maps from a noisy measurement
// set, and a noise-free held-out set whose baseline loss is exactly zero.
class ToyExperiment {
public:
    explicit ToyExperiment(uint64_t seed, uint32_t num_grad_samples = 100);

    AblationRecord evaluate(const ToyQuantSpec& spec, const std::string& config_id) const;

    const ToyModel& model() const { return model_; }
    const SensitivityMap& fisher(int layer) const { return fisher_[layer]; }

private:
    ToyModel model_;
    ToyDataset eval_set_;
    SensitivityMap fisher_[2];
    SensitivityMap activation_[2];
    WeightMatrix base_[2];
};

} // namespace dsq
