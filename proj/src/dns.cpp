#include "dsq/dns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dsq {

void CsrMatrix::validate() const {
    check(cols < 65536, errc::dimension_overflow, "csr: cols must be < 65536");
    check(row_ptr.size() == size_t(rows) + 1, errc::shape_mismatch, "csr: bad row_ptr length");
    check(row_ptr[0] == 0, errc::internal, "csr: row_ptr[0] != 0");
    for (uint32_t r = 0; r < rows; ++r) {
        check(row_ptr[r] <= row_ptr[r + 1], errc::internal, "csr: row_ptr not nondecreasing");
        for (uint32_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            check(col_idx[p] < cols, errc::internal, "csr: column index out of range");
            if (p > row_ptr[r]) {
                check(col_idx[p - 1] < col_idx[p], errc::internal,
                      "csr: columns not strictly increasing");
            }
        }
    }
    check(row_ptr[rows] == col_idx.size() && col_idx.size() == values.size(),
          errc::shape_mismatch, "csr: nnz mismatch");
    for (float v : values) {
        check(is_finite(v), errc::non_finite_value, "csr: non-finite value");
    }
}

CsrMatrix csr_from_triplets(uint32_t rows, uint32_t cols,
                            const std::vector<uint32_t>& trip_rows,
                            const std::vector<uint32_t>& trip_cols,
                            const std::vector<float>& trip_vals) {
    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(size_t(rows) + 1, 0);
    const size_t nnz = trip_rows.size();
    for (size_t i = 0; i < nnz; ++i) m.row_ptr[trip_rows[i] + 1]++;
    for (uint32_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    m.col_idx.resize(nnz);
    m.values.resize(nnz);
    for (size_t i = 0; i < nnz; ++i) {
        m.col_idx[i] = static_cast<uint16_t>(trip_cols[i]);
        m.values[i] = trip_vals[i];
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// decomposition
// ---------------------------------------------------------------------------

namespace {

// indices of the m largest keys; ties broken by lower index
void mark_top_m(const std::vector<size_t>& candidates,
                const std::vector<float>& keys, size_t m,
                std::vector<uint8_t>& mark) {
    if (m == 0) return;
    std::vector<size_t> idx(candidates);
    m = std::min(m, idx.size());
    std::nth_element(idx.begin(), idx.begin() + (m - 1), idx.end(),
                     [&](size_t a, size_t b) {
                         if (keys[a] != keys[b]) return keys[a] > keys[b];
                         return a < b;
                     });
    for (size_t i = 0; i < m; ++i) mark[idx[i]] = 1;
}

} // namespace

Decomposition decompose(const WeightMatrix& matrix, const std::vector<float>& sens,
                        const QuantConfig& cfg) {
    matrix.validate();
    cfg.validate();
    const size_t n = matrix.size();
    check(sens.size() == n, errc::shape_mismatch, matrix.name + ": sensitivity shape mismatch");
    check(matrix.cols < 65536, errc::dimension_overflow,
          matrix.name + ": cols must be < 65536 for 16-bit CSR columns");

    const size_t m_sens = static_cast<size_t>(std::ceil(cfg.sensitive_fraction * double(n)));
    const size_t m_out = static_cast<size_t>(std::ceil(cfg.outlier_fraction * double(n)));
    check(m_sens + m_out < n, errc::fraction_overflow,
          matrix.name + ": fractions would mark the entire matrix");

    Decomposition d;
    d.mask.assign(n, 0);

    // sensitive values first
    if (m_sens > 0) {
        std::vector<size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        mark_top_m(all, sens, m_sens, d.mask);
    }
    d.sensitive_count = static_cast<uint32_t>(m_sens);

    // magnitude outliers from the remaining weights
    if (m_out > 0) {
        std::vector<size_t> rest;
        rest.reserve(n - m_sens);
        for (size_t i = 0; i < n; ++i) {
            if (!d.mask[i]) rest.push_back(i);
        }
        std::vector<float> mag(n);
        for (size_t i = 0; i < n; ++i) mag[i] = std::abs(matrix.values[i]);
        mark_top_m(rest, mag, m_out, d.mask);
    }
    d.outlier_count = static_cast<uint32_t>(m_out);

    // thresholds from the unmarked weights; extracted positions go to CSR
    d.dense = matrix;
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    std::vector<uint32_t> tr, tc;
    std::vector<float> tv;
    tr.reserve(m_sens + m_out);
    for (size_t i = 0; i < n; ++i) {
        if (d.mask[i]) {
            tr.push_back(static_cast<uint32_t>(i / matrix.cols));
            tc.push_back(static_cast<uint32_t>(i % matrix.cols));
            tv.push_back(matrix.values[i]);
            d.dense.values[i] = 0.0f;
        } else {
            lo = std::min(lo, matrix.values[i]);
            hi = std::max(hi, matrix.values[i]);
        }
    }
    d.t_min = lo;
    d.t_max = hi;
    d.sparse = csr_from_triplets(matrix.rows, matrix.cols, tr, tc, tv);
    return d;
}

WeightMatrix reconstruct(const Decomposition& d) {
    WeightMatrix out = d.dense;
    for (uint32_t r = 0; r < d.sparse.rows; ++r) {
        for (uint32_t p = d.sparse.row_ptr[r]; p < d.sparse.row_ptr[r + 1]; ++p) {
            out.values[size_t(r) * d.sparse.cols + d.sparse.col_idx[p]] = d.sparse.values[p];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// hybrid split
// ---------------------------------------------------------------------------

HybridSplit hybrid_split(const CsrMatrix& sparse, uint32_t top_k) {
    sparse.validate();
    check(top_k <= sparse.rows, errc::invalid_argument, "hybrid_split: top_k > rows");

    std::vector<uint32_t> order(sparse.rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        const uint32_t na = sparse.row_nnz(a), nb = sparse.row_nnz(b);
        if (na != nb) return na > nb;
        return a < b;
    });

    HybridSplit h;
    h.cols = sparse.cols;
    h.dense_row_ids.assign(order.begin(), order.begin() + top_k);
    std::sort(h.dense_row_ids.begin(), h.dense_row_ids.end());

    std::vector<uint8_t> promoted(sparse.rows, 0);
    for (uint32_t r : h.dense_row_ids) promoted[r] = 1;

    h.promoted_rows.assign(size_t(top_k) * sparse.cols, 0.0f);
    for (uint32_t i = 0; i < top_k; ++i) {
        const uint32_t r = h.dense_row_ids[i];
        for (uint32_t p = sparse.row_ptr[r]; p < sparse.row_ptr[r + 1]; ++p) {
            h.promoted_rows[size_t(i) * sparse.cols + sparse.col_idx[p]] = sparse.values[p];
        }
    }

    h.residual.rows = sparse.rows;
    h.residual.cols = sparse.cols;
    h.residual.row_ptr.assign(size_t(sparse.rows) + 1, 0);
    for (uint32_t r = 0; r < sparse.rows; ++r) {
        const uint32_t cnt = promoted[r] ? 0 : sparse.row_nnz(r);
        h.residual.row_ptr[r + 1] = h.residual.row_ptr[r] + cnt;
    }
    h.residual.col_idx.reserve(h.residual.row_ptr.back());
    h.residual.values.reserve(h.residual.row_ptr.back());
    for (uint32_t r = 0; r < sparse.rows; ++r) {
        if (promoted[r]) continue;
        for (uint32_t p = sparse.row_ptr[r]; p < sparse.row_ptr[r + 1]; ++p) {
            h.residual.col_idx.push_back(sparse.col_idx[p]);
            h.residual.values.push_back(sparse.values[p]);
        }
    }
    h.residual.validate();
    return h;
}

} // namespace dsq
