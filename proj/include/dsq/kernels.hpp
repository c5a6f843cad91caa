#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsq/packfmt.hpp"

namespace dsq {

using ActivationVector = std::vector<float>;

// Execution mode for every kernel. Parallel splits work by output row with
// OpenMP; each output element is owned by one worker and accumulation within
// a row is ascending, so results are bit-identical to serial regardless of
// thread count.
enum class Exec { serial, parallel };

// out[r] = sum_c lut_r[idx(r,c)] * x[c], ascending c, double accumulation
std::vector<double> lut_matvec(const PackedDense& packed, const ActivationVector& x,
                               Exec exec = Exec::parallel);

// standard CSR row-wise product, ascending column order
std::vector<double> csr_matvec(const CsrMatrix& sparse, const ActivationVector& x,
                               Exec exec = Exec::parallel);

// Fused dense+sparse product: LUT dequant matvec plus, per row, either the
// promoted dense row or the CSR residual row. Masked positions contribute
// lut[0] through the dense path and their stored delta through the sparse
// path, which sums to the retained full-precision value.
std::vector<double> fused_dns_matvec(const QuantizedLayer& layer, const ActivationVector& x,
                                     Exec exec = Exec::parallel);

// plain dense matvec, used for promoted rows and reference paths
std::vector<double> dense_matvec(const std::vector<float>& m, uint32_t rows, uint32_t cols,
                                 const ActivationVector& x, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// serial reference implementations (test oracles)
//
// These materialize explicit dense matrices and multiply them with the same
// per-row term order as the kernels above, so matched-order comparisons are
// bit-exact. They stay deliberately naive.
// ---------------------------------------------------------------------------
namespace ref {

// dequantized dense matrix: every position resolves through its LUT
std::vector<float> dequant_dense(const PackedDense& packed);

// densified CSR (zeros elsewhere)
std::vector<float> densify(const CsrMatrix& m);

std::vector<double> lut_matvec(const PackedDense& packed, const ActivationVector& x);
std::vector<double> csr_matvec(const CsrMatrix& sparse, const ActivationVector& x);
std::vector<double> fused_dns_matvec(const QuantizedLayer& layer, const ActivationVector& x);

} // namespace ref

// ---------------------------------------------------------------------------
// microbenchmark
// ---------------------------------------------------------------------------

struct BenchRecord {
    std::string kernel;
    uint32_t repeats = 0;
    double median_seconds = 0.0;
    std::vector<double> all_seconds;
    uint64_t bytes_touched = 0; // storage-level traffic estimate
};

enum class BenchKernel { lut, csr, fused, reference };

// Median wall time of `repeats` runs (>= 3) after one warmup run.
BenchRecord bench_matvec(const QuantizedLayer& layer, const ActivationVector& x,
                         uint32_t repeats, BenchKernel kernel, Exec exec = Exec::parallel);

// Byte-traffic estimate for one product: packed payload + LUTs + CSR arrays
// (+ promoted rows) + activation read + output write.
uint64_t bytes_touched_estimate(const QuantizedLayer& layer);

} // namespace dsq
