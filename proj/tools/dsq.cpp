// dsq -- sensitivity-weighted codebook quantization with dense-and-sparse
// decomposition, LUT/CSR execution kernels, and a roofline profiler.
//
// Subcommands: quantize, dequantize, matvec, profile, ablate, inspect.
// Exit codes: 0 success, 2 argument error, 3 data error, 4 internal error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsq/ablate.hpp"
#include "dsq/container.hpp"
#include "dsq/kernels.hpp"
#include "dsq/pipeline.hpp"
#include "dsq/roofline.hpp"
#include "dsq/toy_model.hpp"

namespace {

using namespace dsq;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct QuantizeArgs {
    std::string weights_path;
    std::string grads_dir;
    bool use_toy = false;
    std::string method = "fisher"; // fisher | unweighted | rtn
    std::string out_path = "model.dsq";
    QuantConfig cfg;
    uint32_t hybrid_top_k = 10;
};

void apply_config_file(const std::string& path, QuantizeArgs& a) {
    std::ifstream in(path);
    check(in.good(), errc::missing_file, "cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::malformed_header, path + ": " + e.what());
    }
    if (j.contains("bits")) a.cfg.bits = j["bits"].get<uint32_t>();
    if (j.contains("sensitive_fraction")) a.cfg.sensitive_fraction = j["sensitive_fraction"].get<double>();
    if (j.contains("outlier_fraction")) a.cfg.outlier_fraction = j["outlier_fraction"].get<double>();
    if (j.contains("group_size")) a.cfg.group_size = j["group_size"].get<uint32_t>();
    if (j.contains("kmeans_max_iters")) a.cfg.kmeans_max_iters = j["kmeans_max_iters"].get<uint32_t>();
    if (j.contains("kmeans_tol")) a.cfg.kmeans_tol = j["kmeans_tol"].get<double>();
    if (j.contains("seed")) a.cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("hybrid_top_k")) a.hybrid_top_k = j["hybrid_top_k"].get<uint32_t>();
    if (j.contains("method")) a.method = j["method"].get<std::string>();
}

CodebookMethod parse_method(const std::string& m) {
    if (m == "fisher" || m == "weighted") return CodebookMethod::weighted_kmeans;
    if (m == "unweighted") return CodebookMethod::unweighted_kmeans;
    if (m == "rtn") return CodebookMethod::rtn;
    fail(errc::invalid_argument, "unknown method: " + m);
}

std::vector<std::string> gradient_files(const std::string& dir) {
    namespace fs = std::filesystem;
    check(fs::is_directory(dir), errc::missing_file, "gradient directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    check(!files.empty(), errc::empty_input, "no gradient files in " + dir);
    return files;
}

int cmd_quantize(const QuantizeArgs& a) {
    a.cfg.validate();
    QuantizeOptions opt;
    opt.cfg = a.cfg;
    opt.hybrid_top_k = a.hybrid_top_k;
    opt.method = parse_method(a.method);

    QuantContainer container;
    container.meta.cfg = a.cfg;
    container.meta.hybrid_top_k = a.hybrid_top_k;
    container.meta.method_code = uint32_t(opt.method);

    std::vector<std::pair<WeightMatrix, SensitivityMap>> work;
    if (a.use_toy) {
        ToyModelConfig tc;
        tc.seed = a.cfg.seed == 0 ? 1 : a.cfg.seed;
        ToyModel model = ToyModel::random(tc);
        const WeightMatrix w0 = model.export_weights(0);
        const WeightMatrix w1 = model.export_weights(1);
        model.import_weights(0, w0);
        model.import_weights(1, w1);
        const ToyDataset ds = make_dataset(model, 100, tc.seed * 977 + 11, 0.3);
        work.emplace_back(w0, fisher_diagonal(toy_gradients(model, ds, 0, 100)));
        work.emplace_back(w1, fisher_diagonal(toy_gradients(model, ds, 1, 100)));
    } else {
        check(!a.weights_path.empty(), errc::invalid_argument,
              "either --weights or --toy is required");
        WeightMatrix w = load_weights(a.weights_path);
        w.name = std::filesystem::path(a.weights_path).stem().string();
        SensitivityMap sens;
        if (!a.grads_dir.empty()) {
            const GradientSampleSet gs =
                load_gradient_samples(w.name, w.rows, w.cols, gradient_files(a.grads_dir));
            sens = fisher_diagonal(gs);
        } else {
            check(opt.method != CodebookMethod::weighted_kmeans, errc::invalid_argument,
                  "--method fisher requires --grads (or use --toy)");
            sens = uniform_sensitivity(w.name, w.rows, w.cols);
        }
        work.emplace_back(std::move(w), std::move(sens));
    }

    uint64_t total_bits = 0, total_weights = 0;
    for (auto& [w, sens] : work) {
        try {
            QuantizeStats stats;
            container.layers.push_back(quantize_layer(w, sens, opt, &stats));
            const auto& q = container.layers.back();
            std::cout << q.name << "\trows " << q.rows << "\tcols " << q.cols << "\tnnz "
                      << q.sparse.nnz() << "\tavg_bits " << fmt(q.avg_bits) << "\n";
            const LayerBitStats s = layer_bit_stats(q.rows, q.cols, a.cfg.bits,
                                                    a.cfg.group_size, q.sparse.nnz());
            total_bits += s.total_bits;
            total_weights += s.weight_count;
        } catch (Error& e) {
            fail(e.code(), w.name + ": " + e.what());
        }
    }
    const double avg = double(total_bits) / double(total_weights);
    std::cout << "model\tavg_bits " << fmt(avg) << "\tcompression " << fmt(16.0 / avg)
              << "x\n";
    save_container(container, a.out_path);
    std::cout << "wrote " << a.out_path << "\n";
    return 0;
}

const QuantizedLayer& select_layer(const QuantContainer& c, const std::string& name) {
    check(!c.layers.empty(), errc::empty_input, "container has no layers");
    if (name.empty()) {
        check(c.layers.size() == 1, errc::invalid_argument,
              "container has several layers; pass --layer-name");
        return c.layers[0];
    }
    for (const auto& l : c.layers) {
        if (l.name == name) return l;
    }
    fail(errc::invalid_argument, "no layer named " + name);
}

int cmd_dequantize(const std::string& container_path, const std::string& layer_name,
                   const std::string& out_path) {
    const QuantContainer c = load_container(container_path);
    const QuantizedLayer& l = select_layer(c, layer_name);
    WeightMatrix m = dequantize_layer(l);
    save_weights(m, out_path);
    std::cout << "wrote " << out_path << " (" << m.rows << "x" << m.cols << ")\n";
    return 0;
}

int cmd_matvec(const std::string& container_path, const std::string& layer_name,
               const std::string& x_path, const std::string& kernel, uint32_t repeats,
               const std::string& out_path, bool serial) {
    const QuantContainer c = load_container(container_path);
    const QuantizedLayer& l = select_layer(c, layer_name);
    const WeightMatrix xt = load_weights(x_path);
    check(size_t(xt.rows) * xt.cols == l.cols, errc::shape_mismatch,
          "activation vector length must equal layer cols");
    ActivationVector x(xt.values.begin(), xt.values.end());

    BenchKernel bk;
    if (kernel == "lut") bk = BenchKernel::lut;
    else if (kernel == "csr") bk = BenchKernel::csr;
    else if (kernel == "fused") bk = BenchKernel::fused;
    else if (kernel == "reference") bk = BenchKernel::reference;
    else fail(errc::invalid_argument, "unknown kernel: " + kernel);

    const Exec exec = serial ? Exec::serial : Exec::parallel;
    const BenchRecord rec = bench_matvec(l, x, repeats, bk, exec);

    std::vector<double> out;
    switch (bk) {
        case BenchKernel::lut: out = lut_matvec(l.packed, x, exec); break;
        case BenchKernel::csr: out = csr_matvec(l.sparse, x, exec); break;
        case BenchKernel::fused: out = fused_dns_matvec(l, x, exec); break;
        case BenchKernel::reference: out = ref::fused_dns_matvec(l, x); break;
    }
    if (!out_path.empty()) {
        WeightMatrix r;
        r.name = l.name + ".out";
        r.rows = uint32_t(out.size());
        r.cols = 1;
        r.values.assign(out.begin(), out.end());
        save_weights(r, out_path);
        std::cout << "wrote " << out_path << "\n";
    }
    double checksum = 0.0;
    for (double v : out) checksum += v;
    std::cout << "kernel " << rec.kernel << "\trows " << out.size() << "\tsum "
              << fmt(checksum) << "\tbytes_touched " << rec.bytes_touched << "\n";
    // wall times go to stderr so stdout stays deterministic
    std::fprintf(stderr, "median_seconds %.6e (repeats %u)\n", rec.median_seconds,
                 rec.repeats);
    return 0;
}

int cmd_profile(const std::string& hw_path, const std::string& shape_path,
                uint32_t seq_len_override, const std::string& bits_list) {
    const HardwareProfile hw = load_hardware_profile(hw_path);
    ModelShape shape = load_model_shape(shape_path);
    if (seq_len_override > 0) shape.seq_len = seq_len_override;

    std::cout << "# hardware\t" << hw.name << "\tpeak_flops\t" << fmt(hw.peak_flops)
              << "\tmem_bandwidth\t" << fmt(hw.mem_bandwidth) << "\tflops_per_byte\t"
              << fmt(hw.flops_per_byte()) << "\n";
    std::cout << "# model\t" << shape.name << "\tseq_len\t" << shape.seq_len
              << "\tweight_bits\t" << shape.weight_bits << "\n";

    const DecodeCosts dc = decode_step_costs(shape, hw);
    std::cout << "layer\tkind\tflops\tweight_elems\tact_elems\tbytes\ttime_s\tbound\t"
                 "intensity\n";
    auto kind_name = [](LayerKind k) {
        switch (k) {
            case LayerKind::fully_connected: return "fc";
            case LayerKind::attention_matmul: return "attn";
            default: return "other";
        }
    };
    auto emit = [&](const LayerCost& c) {
        std::cout << c.name << "\t" << kind_name(c.kind) << "\t" << fmt(c.flops) << "\t"
                  << fmt(c.weight_elems) << "\t" << fmt(c.activation_elems) << "\t"
                  << fmt(c.total_bytes()) << "\t" << fmt(c.predicted_time(hw)) << "\t"
                  << (c.memory_bound(hw) ? "memory" : "compute") << "\t"
                  << fmt(arithmetic_intensity(c)) << "\n";
    };
    for (const auto& c : dc.layers) emit(c);
    emit(dc.total);
    std::cout << "# weight_traffic_share\t" << fmt(dc.weight_traffic_share) << "\n";

    std::vector<uint32_t> bits;
    {
        std::string tok;
        for (char ch : bits_list + ",") {
            if (ch == ',') {
                if (!tok.empty()) bits.push_back(uint32_t(std::stoul(tok)));
                tok.clear();
            } else {
                tok += ch;
            }
        }
    }
    const auto curve = predicted_runtime_curve(shape, hw, bits);
    std::cout << "# runtime_curve\nbits\tseconds\tnormalized\n";
    for (const auto& p : curve) {
        std::cout << p.bits << "\t" << fmt(p.seconds) << "\t" << fmt(p.normalized) << "\n";
    }
    return 0;
}

int cmd_ablate(const std::string& suite, uint64_t seed, const std::string& tsv_path,
               const std::string& json_path) {
    const AblationReport rep = run_ablation(suite, seed);
    const std::string tsv = report_tsv(rep);
    if (tsv_path.empty()) {
        std::cout << tsv;
    } else {
        std::ofstream out(tsv_path, std::ios::binary | std::ios::trunc);
        check(out.good(), errc::io_failure, "cannot write " + tsv_path);
        out << tsv;
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
        check(out.good(), errc::io_failure, "cannot write " + json_path);
        out << report_json(rep);
    }
    return 0;
}

int cmd_inspect(const std::string& path) {
    const QuantContainer c = load_container(path); // checksum verified here
    std::cout << "container\t" << path << "\nchecksum\tok\nversion\t" << kContainerVersion
              << "\nlayers\t" << c.layers.size() << "\n";
    std::cout << "config\tbits " << c.meta.cfg.bits << "\tsensitive_frac "
              << fmt(c.meta.cfg.sensitive_fraction) << "\toutlier_frac "
              << fmt(c.meta.cfg.outlier_fraction) << "\tgroup_size " << c.meta.cfg.group_size
              << "\tseed " << c.meta.cfg.seed << "\tmethod " << c.meta.method_code << "\n";
    for (const auto& l : c.layers) {
        const double sparsity =
            100.0 * double(l.sparse.nnz()) / (double(l.rows) * double(l.cols));
        const uint32_t group_size =
            l.packed.groups_per_row == 1 ? 0 : l.cols / l.packed.groups_per_row;
        std::cout << l.name << "\t" << l.rows << "x" << l.cols << "\tbits " << l.packed.bits
                  << "\tgroup_size " << group_size << "\tluts "
                  << (size_t(l.rows) * l.packed.groups_per_row) << "\tnnz " << l.sparse.nnz()
                  << " (" << fmt(sparsity) << "%)\thybrid_rows "
                  << l.hybrid.dense_row_ids.size() << "\tavg_bits " << fmt(average_bits(l))
                  << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weight-only codebook quantization toolkit"};
    app.require_subcommand(1);

    // quantize
    QuantizeArgs qa;
    std::string config_path;
    auto* q = app.add_subcommand("quantize", "quantize a weight matrix or the toy model");
    q->add_option("--config", config_path, "JSON config file (flags override it)");
    q->add_option("--weights", qa.weights_path, "raw tensor file");
    q->add_option("--grads", qa.grads_dir, "directory of gradient sample tensors");
    q->add_flag("--toy", qa.use_toy, "quantize the built-in toy model");
    q->add_option("--method", qa.method, "fisher | unweighted | rtn");
    q->add_option("--bits", qa.cfg.bits, "codebook bits (2..8)");
    q->add_option("--sensitive-frac", qa.cfg.sensitive_fraction, "sensitive fraction");
    q->add_option("--outlier-frac", qa.cfg.outlier_fraction, "outlier fraction");
    q->add_option("--group-size", qa.cfg.group_size, "0 = channel-wise");
    q->add_option("--kmeans-iters", qa.cfg.kmeans_max_iters, "max Lloyd iterations");
    q->add_option("--kmeans-tol", qa.cfg.kmeans_tol, "relative centroid movement tol");
    q->add_option("--seed", qa.cfg.seed, "seed");
    q->add_option("--hybrid-topk", qa.hybrid_top_k, "rows promoted to dense");
    q->add_option("-o,--out", qa.out_path, "output container path");

    // dequantize
    std::string dq_container, dq_layer, dq_out = "dequantized.tensor";
    auto* d = app.add_subcommand("dequantize", "write the dequantized matrix");
    d->add_option("container", dq_container, "container path")->required();
    d->add_option("--layer-name", dq_layer, "layer to extract");
    d->add_option("-o,--out", dq_out, "output tensor path");

    // matvec
    std::string mv_container, mv_layer, mv_x, mv_kernel = "fused", mv_out;
    uint32_t mv_repeats = 3;
    bool mv_serial = false;
    auto* m = app.add_subcommand("matvec", "run a kernel against an activation vector");
    m->add_option("--layer", mv_container, "container path")->required();
    m->add_option("--layer-name", mv_layer, "layer to use");
    m->add_option("--x", mv_x, "activation tensor path")->required();
    m->add_option("--kernel", mv_kernel, "lut | csr | fused | reference");
    m->add_option("--repeats", mv_repeats, "timing repeats (>= 3)");
    m->add_option("-o,--out", mv_out, "output tensor path");
    m->add_flag("--serial", mv_serial, "force the serial path");

    // profile
    std::string pf_hw, pf_shape, pf_bits = "2,3,4,5,6,7,8,9,10,11,12,13,14,15,16";
    uint32_t pf_seq = 0;
    auto* p = app.add_subcommand("profile", "roofline model of decoder inference");
    p->add_option("--hw", pf_hw, "hardware profile JSON")->required();
    p->add_option("--shape", pf_shape, "model shape JSON")->required();
    p->add_option("--seq-len", pf_seq, "override sequence length");
    p->add_option("--bits-list", pf_bits, "comma-separated bit widths for the curve");

    // ablate
    std::string ab_suite, ab_tsv, ab_json;
    uint64_t ab_seed = 1;
    auto* a = app.add_subcommand("ablate", "toy-scale quantization comparisons");
    a->add_option("--suite", ab_suite, "sensitivity | sparsity | grouping | obd-obs")
        ->required();
    a->add_option("--seed", ab_seed, "seed");
    a->add_option("--tsv", ab_tsv, "TSV report path (default stdout)");
    a->add_option("--json", ab_json, "JSON report path");

    // inspect
    std::string in_container;
    auto* i = app.add_subcommand("inspect", "summarize a container");
    i->add_option("container", in_container, "container path")->required();

    try {
        // config file first, flags override
        for (int k = 1; k + 1 < argc; ++k) {
            if (std::string(argv[k]) == "--config") apply_config_file(argv[k + 1], qa);
        }
        app.parse(argc, argv);
        if (q->parsed()) return cmd_quantize(qa);
        if (d->parsed()) return cmd_dequantize(dq_container, dq_layer, dq_out);
        if (m->parsed()) {
            return cmd_matvec(mv_container, mv_layer, mv_x, mv_kernel, mv_repeats, mv_out,
                              mv_serial);
        }
        if (p->parsed()) return cmd_profile(pf_hw, pf_shape, pf_seq, pf_bits);
        if (a->parsed()) return cmd_ablate(ab_suite, ab_seed, ab_tsv, ab_json);
        if (i->parsed()) return cmd_inspect(in_container);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.classify()) {
            case error_class::argument: return 2;
            case error_class::data: return 3;
            case error_class::internal: return 4;
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
