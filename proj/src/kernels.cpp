#include "dsq/kernels.hpp"

#include <algorithm>
#include <chrono>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsq {

// written by the benchmark loop so the optimizer cannot drop timed calls
volatile double detail_bench_sink = 0.0;

namespace {

// one packed row dot x, ascending c
double lut_row_dot(const PackedDense& p, uint32_t r, const float* x) {
    const uint8_t* in = p.payload.data() + size_t(r) * p.row_stride();
    const uint32_t gcols = p.group_cols();
    const uint32_t k = p.levels();
    const float* lut = p.luts.data() + size_t(r) * p.groups_per_row * k;
    double acc = 0.0;
    size_t bitpos = 0;
    for (uint32_t c = 0; c < p.cols; ++c) {
        uint32_t idx = 0;
        for (uint32_t b = 0; b < p.bits; ++b, ++bitpos) {
            idx |= uint32_t(((in[bitpos >> 3] >> (bitpos & 7)) & 1u) << b);
        }
        acc += double(lut[(c / gcols) * k + idx]) * double(x[c]);
    }
    return acc;
}

double csr_row_dot(const CsrMatrix& m, uint32_t r, const float* x) {
    double acc = 0.0;
    for (uint32_t p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
        acc += double(m.values[p]) * double(x[m.col_idx[p]]);
    }
    return acc;
}

double dense_row_dot(const float* row, uint32_t cols, const float* x) {
    double acc = 0.0;
    for (uint32_t c = 0; c < cols; ++c) acc += double(row[c]) * double(x[c]);
    return acc;
}

} // namespace

std::vector<double> lut_matvec(const PackedDense& packed, const ActivationVector& x, Exec exec) {
    packed.validate();
    check(x.size() == packed.cols, errc::shape_mismatch, "lut_matvec: dimension mismatch");
    std::vector<double> out(packed.rows);
    const float* xp = x.data();
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t r = 0; r < int64_t(packed.rows); ++r) {
            out[r] = lut_row_dot(packed, uint32_t(r), xp);
        }
    } else {
        for (uint32_t r = 0; r < packed.rows; ++r) out[r] = lut_row_dot(packed, r, xp);
    }
    return out;
}

std::vector<double> csr_matvec(const CsrMatrix& sparse, const ActivationVector& x, Exec exec) {
    sparse.validate();
    check(x.size() == sparse.cols, errc::shape_mismatch, "csr_matvec: dimension mismatch");
    std::vector<double> out(sparse.rows);
    const float* xp = x.data();
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t r = 0; r < int64_t(sparse.rows); ++r) {
            out[r] = csr_row_dot(sparse, uint32_t(r), xp);
        }
    } else {
        for (uint32_t r = 0; r < sparse.rows; ++r) out[r] = csr_row_dot(sparse, r, xp);
    }
    return out;
}

std::vector<double> dense_matvec(const std::vector<float>& m, uint32_t rows, uint32_t cols,
                                 const ActivationVector& x, Exec exec) {
    check(m.size() == size_t(rows) * cols, errc::shape_mismatch, "dense_matvec: bad matrix size");
    check(x.size() == cols, errc::shape_mismatch, "dense_matvec: dimension mismatch");
    std::vector<double> out(rows);
    const float* xp = x.data();
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t r = 0; r < int64_t(rows); ++r) {
            out[r] = dense_row_dot(m.data() + size_t(r) * cols, cols, xp);
        }
    } else {
        for (uint32_t r = 0; r < rows; ++r) {
            out[r] = dense_row_dot(m.data() + size_t(r) * cols, cols, xp);
        }
    }
    return out;
}

std::vector<double> fused_dns_matvec(const QuantizedLayer& layer, const ActivationVector& x,
                                     Exec exec) {
    layer.validate();
    check(x.size() == layer.cols, errc::shape_mismatch, "fused_dns_matvec: dimension mismatch");

    // promoted-row slot lookup; rows not promoted take the CSR residual path
    std::vector<int32_t> promoted_slot(layer.rows, -1);
    for (size_t i = 0; i < layer.hybrid.dense_row_ids.size(); ++i) {
        promoted_slot[layer.hybrid.dense_row_ids[i]] = int32_t(i);
    }

    std::vector<double> out(layer.rows);
    const float* xp = x.data();
    auto row_value = [&](uint32_t r) {
        double acc = lut_row_dot(layer.packed, r, xp);
        const int32_t slot = promoted_slot[r];
        if (slot >= 0) {
            acc += dense_row_dot(layer.hybrid.promoted_rows.data() + size_t(slot) * layer.cols,
                                 layer.cols, xp);
        } else {
            acc += csr_row_dot(layer.hybrid.residual, r, xp);
        }
        return acc;
    };
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t r = 0; r < int64_t(layer.rows); ++r) out[r] = row_value(uint32_t(r));
    } else {
        for (uint32_t r = 0; r < layer.rows; ++r) out[r] = row_value(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace ref {

std::vector<float> dequant_dense(const PackedDense& packed) {
    AssignmentVector assign = unpack(packed);
    std::vector<float> m(assign.size());
    for (uint32_t r = 0; r < packed.rows; ++r) {
        for (uint32_t c = 0; c < packed.cols; ++c) {
            const size_t i = size_t(r) * packed.cols + c;
            m[i] = packed.lut_at(r, c)[assign[i]];
        }
    }
    return m;
}

std::vector<float> densify(const CsrMatrix& m) {
    std::vector<float> out(size_t(m.rows) * m.cols, 0.0f);
    for (uint32_t r = 0; r < m.rows; ++r) {
        for (uint32_t p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
            out[size_t(r) * m.cols + m.col_idx[p]] = m.values[p];
        }
    }
    return out;
}

std::vector<double> lut_matvec(const PackedDense& packed, const ActivationVector& x) {
    const std::vector<float> m = dequant_dense(packed);
    return dense_matvec(m, packed.rows, packed.cols, x, Exec::serial);
}

std::vector<double> csr_matvec(const CsrMatrix& sparse, const ActivationVector& x) {
    const std::vector<float> m = densify(sparse);
    return dense_matvec(m, sparse.rows, sparse.cols, x, Exec::serial);
}

std::vector<double> fused_dns_matvec(const QuantizedLayer& layer, const ActivationVector& x) {
    // dense dequant product plus densified sparse product, summed per row in
    // the same order as the fused kernel
    const std::vector<float> dq = dequant_dense(layer.packed);
    std::vector<float> sp = densify(layer.hybrid.residual);
    for (size_t i = 0; i < layer.hybrid.dense_row_ids.size(); ++i) {
        const uint32_t r = layer.hybrid.dense_row_ids[i];
        for (uint32_t c = 0; c < layer.cols; ++c) {
            sp[size_t(r) * layer.cols + c] = layer.hybrid.promoted_rows[size_t(i) * layer.cols + c];
        }
    }
    const std::vector<double> a = dense_matvec(dq, layer.rows, layer.cols, x, Exec::serial);
    const std::vector<double> b = dense_matvec(sp, layer.rows, layer.cols, x, Exec::serial);
    std::vector<double> out(layer.rows);
    for (uint32_t r = 0; r < layer.rows; ++r) out[r] = a[r] + b[r];
    return out;
}

} // namespace ref

// ---------------------------------------------------------------------------
// microbenchmark
// ---------------------------------------------------------------------------

uint64_t bytes_touched_estimate(const QuantizedLayer& layer) {
    const LayerBitStats s = layer_bit_stats(
        layer.rows, layer.cols, layer.packed.bits,
        layer.packed.groups_per_row == 1 ? 0 : layer.cols / layer.packed.groups_per_row,
        layer.sparse.nnz());
    // stored weights plus a 16-bit activation read and output write
    return s.total_bits / 8 + uint64_t(layer.cols) * 2 + uint64_t(layer.rows) * 2;
}

BenchRecord bench_matvec(const QuantizedLayer& layer, const ActivationVector& x,
                         uint32_t repeats, BenchKernel kernel, Exec exec) {
    check(repeats >= 3, errc::invalid_argument, "bench: repeats must be >= 3");

    std::vector<float> reference_dense;
    if (kernel == BenchKernel::reference) {
        reference_dense = ref::dequant_dense(layer.packed);
    }
    auto run = [&]() {
        switch (kernel) {
            case BenchKernel::lut: return lut_matvec(layer.packed, x, exec);
            case BenchKernel::csr: return csr_matvec(layer.sparse, x, exec);
            case BenchKernel::fused: return fused_dns_matvec(layer, x, exec);
            case BenchKernel::reference:
                return dense_matvec(reference_dense, layer.rows, layer.cols, x, exec);
        }
        return std::vector<double>{};
    };

    double sink = 0.0;
    auto r0 = run(); // warmup
    sink += r0.empty() ? 0.0 : r0[0];

    BenchRecord rec;
    rec.repeats = repeats;
    switch (kernel) {
        case BenchKernel::lut: rec.kernel = "lut"; break;
        case BenchKernel::csr: rec.kernel = "csr"; break;
        case BenchKernel::fused: rec.kernel = "fused"; break;
        case BenchKernel::reference: rec.kernel = "reference"; break;
    }
    for (uint32_t i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = run();
        const auto t1 = std::chrono::steady_clock::now();
        sink += out[0];
        rec.all_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    detail_bench_sink = sink;
    std::vector<double> sorted = rec.all_seconds;
    std::sort(sorted.begin(), sorted.end());
    rec.median_seconds = (repeats % 2 == 1)
                             ? sorted[repeats / 2]
                             : 0.5 * (sorted[repeats / 2 - 1] + sorted[repeats / 2]);

    switch (kernel) {
        case BenchKernel::lut:
            rec.bytes_touched = layer_bit_stats(layer.rows, layer.cols, layer.packed.bits,
                                                layer.packed.groups_per_row == 1
                                                    ? 0
                                                    : layer.cols / layer.packed.groups_per_row,
                                                0).total_bits / 8 +
                                uint64_t(layer.cols) * 2 + uint64_t(layer.rows) * 2;
            break;
        case BenchKernel::csr:
            rec.bytes_touched = uint64_t(layer.sparse.nnz()) * 4 +
                                (uint64_t(layer.rows) + 1) * 4 +
                                uint64_t(layer.cols) * 2 + uint64_t(layer.rows) * 2;
            break;
        case BenchKernel::fused:
            rec.bytes_touched = bytes_touched_estimate(layer);
            break;
        case BenchKernel::reference:
            rec.bytes_touched = uint64_t(layer.rows) * layer.cols * 2 +
                                uint64_t(layer.cols) * 2 + uint64_t(layer.rows) * 2;
            break;
    }
    return rec;
}

} // namespace dsq
