// Microbenchmark comparing the OpenMP kernels against the serial reference
// path on a synthetic quantized layer. Timing goes to stdout as a small
// table; results are checked for bit-exact serial/parallel agreement first.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dsq/kernels.hpp"
#include "dsq/pipeline.hpp"
#include "dsq/sensitivity.hpp"

using namespace dsq;

namespace {

WeightMatrix random_matrix(uint32_t rows, uint32_t cols, uint64_t seed) {
    Rng rng(seed);
    WeightMatrix m;
    m.name = "bench";
    m.rows = rows;
    m.cols = cols;
    m.values.resize(size_t(rows) * cols);
    for (auto& v : m.values) v = static_cast<float>(rng.student_t(4.0));
    return m;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    uint32_t rows = 2048, cols = 2048, bits = 3, repeats = 7;
    double sparsity = 0.0045;
    uint64_t seed = 42;
    app.add_option("--rows", rows);
    app.add_option("--cols", cols);
    app.add_option("--bits", bits);
    app.add_option("--sparsity", sparsity, "total extracted fraction");
    app.add_option("--repeats", repeats);
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    try {
        const WeightMatrix w = random_matrix(rows, cols, seed);
        SensitivityMap sens = uniform_sensitivity(w.name, rows, cols);
        {
            Rng rng(seed + 1);
            for (auto& v : sens.values) v = static_cast<float>(rng.uniform());
        }

        QuantizeOptions opt;
        opt.cfg.bits = bits;
        opt.cfg.sensitive_fraction = sparsity / 9.0;
        opt.cfg.outlier_fraction = sparsity - opt.cfg.sensitive_fraction;
        opt.cfg.seed = seed;
        const QuantizedLayer layer = quantize_layer(w, sens, opt);

        ActivationVector x(cols);
        Rng rng(seed + 2);
        for (auto& v : x) v = static_cast<float>(rng.normal());

        int threads = 1;
#ifdef _OPENMP
        threads = omp_get_max_threads();
#endif
        std::printf("layer %ux%u bits %u nnz %u threads %d\n", rows, cols, bits,
                    layer.sparse.nnz(), threads);
        std::printf("%-10s %14s %14s %9s %9s\n", "kernel", "serial_s", "parallel_s",
                    "speedup", "match");

        const BenchKernel kernels[] = {BenchKernel::lut, BenchKernel::csr,
                                       BenchKernel::fused, BenchKernel::reference};
        for (BenchKernel k : kernels) {
            const BenchRecord rs = bench_matvec(layer, x, repeats, k, Exec::serial);
            const BenchRecord rp = bench_matvec(layer, x, repeats, k, Exec::parallel);

            bool match = true;
            if (k != BenchKernel::reference) {
                std::vector<double> a, b;
                switch (k) {
                    case BenchKernel::lut:
                        a = lut_matvec(layer.packed, x, Exec::serial);
                        b = lut_matvec(layer.packed, x, Exec::parallel);
                        break;
                    case BenchKernel::csr:
                        a = csr_matvec(layer.sparse, x, Exec::serial);
                        b = csr_matvec(layer.sparse, x, Exec::parallel);
                        break;
                    default:
                        a = fused_dns_matvec(layer, x, Exec::serial);
                        b = fused_dns_matvec(layer, x, Exec::parallel);
                        break;
                }
                match = a == b;
            }
            std::printf("%-10s %14.6e %14.6e %8.2fx %9s\n", rs.kernel.c_str(),
                        rs.median_seconds, rp.median_seconds,
                        rs.median_seconds / rp.median_seconds, match ? "exact" : "DIFF");
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.classify() == error_class::argument ? 2 : 3;
    }
    return 0;
}
