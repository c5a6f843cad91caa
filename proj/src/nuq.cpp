#include "dsq/nuq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsq {

void Codebook::validate() const {
    check(!centroids.empty(), errc::empty_input, "empty codebook");
    for (size_t i = 0; i < centroids.size(); ++i) {
        check(is_finite(centroids[i]), errc::non_finite_value, "non-finite centroid");
        if (i > 0) {
            check(centroids[i - 1] <= centroids[i], errc::internal, "unsorted codebook");
        }
    }
}

void QuantConfig::validate() const {
    check(bits >= 2 && bits <= 8, errc::invalid_argument, "bits must be in 2..8");
    check(sensitive_fraction >= 0.0 && sensitive_fraction <= 0.05,
          errc::invalid_argument, "sensitive_fraction must be in [0, 0.05]");
    check(outlier_fraction >= 0.0 && outlier_fraction <= 0.05,
          errc::invalid_argument, "outlier_fraction must be in [0, 0.05]");
    check(sensitive_fraction + outlier_fraction < 1.0, errc::invalid_argument,
          "fraction sum must be < 1");
    check(kmeans_max_iters >= 1, errc::invalid_argument, "kmeans_max_iters must be >= 1");
    check(kmeans_tol >= 0.0, errc::invalid_argument, "kmeans_tol must be >= 0");
}

// ---------------------------------------------------------------------------
// Lloyd weighted 1-D k-means
// ---------------------------------------------------------------------------

namespace {

// nearest centroid in a sorted table; ties go to the lower index
uint16_t nearest_centroid(const std::vector<float>& centroids, float v) {
    const auto it = std::lower_bound(centroids.begin(), centroids.end(), v);
    if (it == centroids.begin()) return 0;
    if (it == centroids.end()) return static_cast<uint16_t>(centroids.size() - 1);
    const size_t hi = static_cast<size_t>(it - centroids.begin());
    const size_t lo = hi - 1;
    const double d_lo = double(v) - double(centroids[lo]);
    const double d_hi = double(centroids[hi]) - double(v);
    return static_cast<uint16_t>(d_lo <= d_hi ? lo : hi);
}

double sse(const std::vector<float>& values, const std::vector<float>& weights,
           const std::vector<float>& centroids, const AssignmentVector& assign) {
    double obj = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        const double d = double(values[i]) - double(centroids[assign[i]]);
        obj += double(weights[i]) * d * d;
    }
    return obj;
}

// centroid j sits at the value whose cumulative weight crosses (j + 0.5)/k
std::vector<float> weighted_quantile_init(const std::vector<float>& values,
                                          const std::vector<float>& weights, uint32_t k) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });

    double total = 0.0;
    for (float w : weights) total += double(w);

    std::vector<float> centroids(k);
    size_t pos = 0;
    double cum = double(weights[order[0]]);
    for (uint32_t j = 0; j < k; ++j) {
        const double target = (j + 0.5) / k * total;
        while (cum < target && pos + 1 < n) {
            ++pos;
            cum += double(weights[order[pos]]);
        }
        centroids[j] = values[order[pos]];
    }
    std::sort(centroids.begin(), centroids.end());
    return centroids;
}

} // namespace

namespace {

// Lloyd working state on the value-sorted order. Clusters of a sorted 1-D
// problem are contiguous, so prefix sums give exact interval costs for the
// merge-split escape below.
struct SortedProblem {
    std::vector<double> v, w;       // sorted by value
    std::vector<size_t> order;      // sorted position -> original index
    std::vector<double> pw, pwv, pwv2;

    double interval_weight(size_t i, size_t j) const { return pw[j + 1] - pw[i]; }
    double interval_mean(size_t i, size_t j) const {
        const double W = interval_weight(i, j);
        if (W > 0.0) return (pwv[j + 1] - pwv[i]) / W;
        double acc = 0.0;
        for (size_t t = i; t <= j; ++t) acc += v[t];
        return acc / double(j - i + 1);
    }
    double interval_cost(size_t i, size_t j) const {
        const double W = interval_weight(i, j);
        if (W <= 0.0) return 0.0;
        const double A = pwv[j + 1] - pwv[i];
        const double Q = pwv2[j + 1] - pwv2[i];
        return std::max(0.0, Q - A * A / W);
    }
};

SortedProblem make_sorted_problem(const std::vector<float>& values,
                                  const std::vector<float>& weights) {
    const size_t n = values.size();
    SortedProblem p;
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), 0);
    std::stable_sort(p.order.begin(), p.order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });
    p.v.resize(n);
    p.w.resize(n);
    for (size_t i = 0; i < n; ++i) {
        p.v[i] = double(values[p.order[i]]);
        p.w[i] = double(weights[p.order[i]]);
    }
    p.pw.assign(n + 1, 0.0);
    p.pwv.assign(n + 1, 0.0);
    p.pwv2.assign(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        p.pw[i + 1] = p.pw[i] + p.w[i];
        p.pwv[i + 1] = p.pwv[i] + p.w[i] * p.v[i];
        p.pwv2[i + 1] = p.pwv2[i] + p.w[i] * p.v[i] * p.v[i];
    }
    return p;
}

struct LloydState {
    std::vector<float> centroids;      // sorted ascending
    std::vector<uint16_t> assign;      // per sorted position
    std::vector<uint32_t> counts;
};

// one assignment pass (ties to the lower centroid index) plus empty-cluster
// repair: an empty cluster steals the value with the largest weighted
// squared distance from its current centroid (ties: lowest position)
void assign_and_repair(const SortedProblem& p, LloydState& st) {
    const size_t n = p.v.size();
    const uint32_t k = uint32_t(st.centroids.size());
    st.assign.resize(n);
    st.counts.assign(k, 0);
    std::vector<float> vf(1);
    for (size_t i = 0; i < n; ++i) {
        st.assign[i] = nearest_centroid(st.centroids, float(p.v[i]));
        st.counts[st.assign[i]]++;
    }
    for (uint32_t j = 0; j < k; ++j) {
        if (st.counts[j] != 0) continue;
        double best = -1.0;
        size_t best_i = n;
        for (size_t i = 0; i < n; ++i) {
            if (st.counts[st.assign[i]] < 2) continue;
            const double d = p.v[i] - double(st.centroids[st.assign[i]]);
            const double score = p.w[i] * d * d;
            if (score > best) {
                best = score;
                best_i = i;
            }
        }
        if (best_i == n) break; // nothing stealable
        st.counts[st.assign[best_i]]--;
        st.assign[best_i] = static_cast<uint16_t>(j);
        st.counts[j] = 1;
        st.centroids[j] = float(p.v[best_i]);
    }
}

// Lloyd alternation until the relative centroid movement drops under tol or
// the iteration budget runs out. Returns iterations spent.
uint32_t lloyd_converge(const SortedProblem& p, LloydState& st, uint32_t max_iters,
                        double tol) {
    const size_t n = p.v.size();
    const uint32_t k = uint32_t(st.centroids.size());
    uint32_t iters = 0;
    while (iters < max_iters) {
        assign_and_repair(p, st);
        ++iters;

        // weighted means; a cluster whose members all carry zero weight
        // falls back to the plain mean of its members
        std::vector<double> num(k, 0.0), den(k, 0.0), plain(k, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const uint16_t a = st.assign[i];
            num[a] += p.w[i] * p.v[i];
            den[a] += p.w[i];
            plain[a] += p.v[i];
        }
        std::vector<float> next(k);
        double max_move = 0.0, max_mag = 0.0;
        for (uint32_t j = 0; j < k; ++j) {
            if (st.counts[j] == 0) {
                next[j] = st.centroids[j];
            } else if (den[j] > 0.0) {
                next[j] = static_cast<float>(num[j] / den[j]);
            } else {
                next[j] = static_cast<float>(plain[j] / st.counts[j]);
            }
            max_move = std::max(max_move, std::abs(double(next[j]) - double(st.centroids[j])));
            max_mag = std::max(max_mag, std::abs(double(st.centroids[j])));
        }
        std::sort(next.begin(), next.end());
        st.centroids = std::move(next);

        if (max_move / std::max(max_mag, 1e-30) < tol) break;
    }
    assign_and_repair(p, st);
    return iters;
}

// contiguous [start, end] interval per cluster, in centroid order
std::vector<std::pair<size_t, size_t>> cluster_intervals(const LloydState& st) {
    std::vector<std::pair<size_t, size_t>> iv(st.centroids.size(), {0, 0});
    std::vector<bool> seen(st.centroids.size(), false);
    for (size_t i = 0; i < st.assign.size(); ++i) {
        const uint16_t a = st.assign[i];
        if (!seen[a]) {
            iv[a] = {i, i};
            seen[a] = true;
        } else {
            iv[a].second = i;
        }
    }
    return iv;
}

// Exact re-optimization of each boundary between adjacent clusters: scan
// every cut of the union interval and keep the best (first best on ties).
// Sweeps to a fixpoint; every accepted cut strictly lowers the objective.
bool boundary_refine(const SortedProblem& p, LloydState& st) {
    const uint32_t k = uint32_t(st.centroids.size());
    if (k < 2) return false;
    auto iv = cluster_intervals(st);
    for (uint32_t j = 0; j < k; ++j) {
        if (st.counts[j] == 0) return false;
    }

    bool any_change = false;
    for (int sweep = 0; sweep < 32; ++sweep) {
        bool changed = false;
        // pairwise cuts
        for (uint32_t c = 0; c + 1 < k; ++c) {
            const size_t s = iv[c].first;
            const size_t e = iv[c + 1].second;
            const size_t cur = iv[c].second;
            const double cur_cost = p.interval_cost(s, cur) + p.interval_cost(cur + 1, e);
            double best_cost = cur_cost;
            size_t best_m = cur;
            for (size_t m = s; m < e; ++m) {
                const double cost = p.interval_cost(s, m) + p.interval_cost(m + 1, e);
                if (cost < best_cost - 1e-12 * (1.0 + cur_cost)) {
                    best_cost = cost;
                    best_m = m;
                }
            }
            if (best_m != cur) {
                iv[c].second = best_m;
                iv[c + 1].first = best_m + 1;
                changed = true;
            }
        }
        // joint cuts over three consecutive clusters; catches boundary
        // chains that no single cut move can improve
        for (uint32_t c = 0; c + 2 < k; ++c) {
            const size_t s = iv[c].first;
            const size_t e = iv[c + 2].second;
            const size_t cur1 = iv[c].second;
            const size_t cur2 = iv[c + 1].second;
            const double cur_cost = p.interval_cost(s, cur1) +
                                    p.interval_cost(cur1 + 1, cur2) +
                                    p.interval_cost(cur2 + 1, e);
            double best_cost = cur_cost;
            size_t best1 = cur1, best2 = cur2;
            for (size_t m1 = s; m1 + 1 < e; ++m1) {
                const double left = p.interval_cost(s, m1);
                if (left >= best_cost) break; // costs grow with interval size
                for (size_t m2 = m1 + 1; m2 < e; ++m2) {
                    const double cost = left + p.interval_cost(m1 + 1, m2) +
                                        p.interval_cost(m2 + 1, e);
                    if (cost < best_cost - 1e-12 * (1.0 + cur_cost)) {
                        best_cost = cost;
                        best1 = m1;
                        best2 = m2;
                    }
                }
            }
            if (best1 != cur1 || best2 != cur2) {
                iv[c].second = best1;
                iv[c + 1] = {best1 + 1, best2};
                iv[c + 2].first = best2 + 1;
                changed = true;
            }
        }
        if (!changed) break;
        any_change = true;
    }
    if (!any_change) return false;

    // rebuild centroids and assignment from the refined intervals
    for (uint32_t c = 0; c < k; ++c) {
        st.centroids[c] = float(p.interval_mean(iv[c].first, iv[c].second));
        st.counts[c] = uint32_t(iv[c].second - iv[c].first + 1);
        for (size_t i = iv[c].first; i <= iv[c].second; ++i) {
            st.assign[i] = static_cast<uint16_t>(c);
        }
    }
    return true;
}

// One merge-split escape: merge the adjacent cluster pair that costs least
// and split the cluster that gains most, when that strictly lowers the
// objective. Deterministic; returns true when a move was applied.
bool merge_split_escape(const SortedProblem& p, LloydState& st) {
    const uint32_t k = uint32_t(st.centroids.size());
    if (k < 2) return false;
    const auto iv = cluster_intervals(st);
    for (uint32_t j = 0; j < k; ++j) {
        if (st.counts[j] == 0) return false; // degenerate; nothing to do
    }

    // top-3 2-way splits across clusters (a merge pair blocks at most two)
    struct SplitCand {
        double gain = -1.0;
        uint32_t cluster = 0;
        size_t cut = 0;
    };
    SplitCand top[3];
    for (uint32_t c = 0; c < k; ++c) {
        const auto [s, e] = iv[c];
        if (s == e) continue;
        const double whole = p.interval_cost(s, e);
        SplitCand cand;
        cand.cluster = c;
        for (size_t m = s; m < e; ++m) {
            const double gain = whole - p.interval_cost(s, m) - p.interval_cost(m + 1, e);
            if (gain > cand.gain) {
                cand.gain = gain;
                cand.cut = m;
            }
        }
        for (int t = 0; t < 3; ++t) {
            if (cand.gain > top[t].gain) {
                for (int u = 2; u > t; --u) top[u] = top[u - 1];
                top[t] = cand;
                break;
            }
        }
    }
    if (top[0].gain <= 0.0) return false;

    // best (merge pair, split cluster) combination
    double best_delta = 0.0;
    uint32_t merge_c = k;
    uint32_t split_c = k;
    size_t split_at = 0;
    for (uint32_t c = 0; c + 1 < k; ++c) {
        const double rise = p.interval_cost(iv[c].first, iv[c + 1].second) -
                            p.interval_cost(iv[c].first, iv[c].second) -
                            p.interval_cost(iv[c + 1].first, iv[c + 1].second);
        for (const SplitCand& cand : top) {
            if (cand.gain <= 0.0 || cand.cluster == c || cand.cluster == c + 1) continue;
            const double delta = cand.gain - rise;
            const double margin = 1e-12 * (1.0 + std::abs(cand.gain));
            if (delta > best_delta + margin) {
                best_delta = delta;
                merge_c = c;
                split_c = cand.cluster;
                split_at = cand.cut;
            }
            break; // candidates are sorted; the first valid one is the best
        }
    }
    if (merge_c == k) return false;

    std::vector<float> next;
    next.reserve(k);
    for (uint32_t c = 0; c < k; ++c) {
        if (c == merge_c) {
            next.push_back(float(p.interval_mean(iv[c].first, iv[c + 1].second)));
            ++c; // skip the partner
        } else if (c == split_c) {
            next.push_back(float(p.interval_mean(iv[c].first, split_at)));
            next.push_back(float(p.interval_mean(split_at + 1, iv[c].second)));
        } else {
            next.push_back(st.centroids[c]);
        }
    }
    std::sort(next.begin(), next.end());
    st.centroids = std::move(next);
    return true;
}

} // namespace

KmeansResult weighted_kmeans_1d(const std::vector<float>& values,
                                const std::vector<float>& weights_in,
                                uint32_t k, const KmeansOptions& opt) {
    const size_t n = values.size();
    check(n >= 1, errc::empty_input, "kmeans: empty input");
    check(k >= 1 && k < kMaskedIndex, errc::invalid_argument, "kmeans: bad k");
    check(weights_in.size() == n, errc::shape_mismatch, "kmeans: weight length mismatch");

    double total_weight = 0.0;
    for (float w : weights_in) {
        check(w >= 0.0f && is_finite(w), errc::invalid_argument, "kmeans: negative weight");
        total_weight += double(w);
    }
    std::vector<float> uniform;
    const std::vector<float>* weights = &weights_in;
    if (total_weight == 0.0) {
        check(opt.zero_weight_fallback, errc::invalid_argument,
              "kmeans: all weights zero and fallback disabled");
        uniform.assign(n, 1.0f);
        weights = &uniform;
    }
    const std::vector<float>& w = *weights;

    KmeansResult res;

    // with at most k distinct values the clustering is exact
    {
        std::vector<float> distinct(values);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() <= k) {
            res.codebook.centroids = distinct;
            while (res.codebook.centroids.size() < k) {
                res.codebook.centroids.push_back(distinct.back());
            }
            res.assignment.resize(n);
            for (size_t i = 0; i < n; ++i) {
                res.assignment[i] = uint16_t(
                    std::lower_bound(distinct.begin(), distinct.end(), values[i]) -
                    distinct.begin());
            }
            res.objective = 0.0;
            res.iterations = 0;
            return res;
        }
    }

    const SortedProblem p = make_sorted_problem(values, w);
    LloydState st;
    st.centroids = weighted_quantile_init(values, w, k);

    uint32_t budget = opt.max_iters;
    double prev_obj = std::numeric_limits<double>::infinity();
    auto current_obj = [&]() {
        double obj = 0.0;
        for (size_t i = 0; i < p.v.size(); ++i) {
            const double d = p.v[i] - double(st.centroids[st.assign[i]]);
            obj += p.w[i] * d * d;
        }
        return obj;
    };

    const uint32_t used = lloyd_converge(p, st, budget, opt.tol);
    res.iterations = used;
    budget -= std::min(budget, used);
    if (opt.check_monotone) prev_obj = current_obj();

    // deterministic escape from Lloyd local optima: exact boundary
    // re-optimization plus merge-cheapest/split-costliest, re-converging
    // after each round
    for (int round = 0; round < 64 && budget > 0; ++round) {
        const bool refined = boundary_refine(p, st);
        const bool moved = merge_split_escape(p, st);
        if (!refined && !moved) break;
        const uint32_t it = lloyd_converge(p, st, budget, opt.tol);
        res.iterations += it;
        budget -= std::min(budget, it);
        if (opt.check_monotone) {
            const double obj = current_obj();
            check(obj <= prev_obj * (1.0 + 1e-12) + 1e-300, errc::internal,
                  "kmeans objective increased");
            prev_obj = obj;
        }
    }

    // map back to the original order
    res.codebook.centroids = st.centroids;
    res.assignment.resize(n);
    for (size_t i = 0; i < n; ++i) res.assignment[p.order[i]] = st.assign[i];
    res.objective = sse(values, w, res.codebook.centroids, res.assignment);
    return res;
}

double weighted_objective(const std::vector<float>& values,
                          const std::vector<float>& weights,
                          const Codebook& cb) {
    check(values.size() == weights.size(), errc::shape_mismatch,
          "weighted_objective: length mismatch");
    double obj = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        const uint16_t a = nearest_centroid(cb.centroids, values[i]);
        const double d = double(values[i]) - double(cb.centroids[a]);
        obj += double(weights[i]) * d * d;
    }
    return obj;
}

// ---------------------------------------------------------------------------
// exact DP oracle (optimal 1-D clusters are contiguous on the sorted order)
// ---------------------------------------------------------------------------

DpOracleResult dp_kmeans_oracle(const std::vector<float>& values,
                                const std::vector<float>& weights_in, uint32_t k) {
    const size_t n = values.size();
    check(n >= 1, errc::empty_input, "dp oracle: empty input");
    check(n <= kDpOracleMaxN, errc::invalid_argument, "dp oracle: size guard exceeded");
    check(k >= 1, errc::invalid_argument, "dp oracle: k must be >= 1");
    check(weights_in.size() == n, errc::shape_mismatch, "dp oracle: weight length mismatch");

    double total_weight = 0.0;
    for (float w : weights_in) total_weight += double(w);
    std::vector<float> uniform;
    const std::vector<float>* wp = &weights_in;
    if (total_weight == 0.0) {
        uniform.assign(n, 1.0f);
        wp = &uniform;
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> v(n), w(n);
    for (size_t i = 0; i < n; ++i) {
        v[i] = double(values[order[i]]);
        w[i] = double((*wp)[order[i]]);
    }

    // prefix sums for O(1) weighted interval cost
    std::vector<double> pw(n + 1, 0.0), pwv(n + 1, 0.0), pwv2(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        pw[i + 1] = pw[i] + w[i];
        pwv[i + 1] = pwv[i] + w[i] * v[i];
        pwv2[i + 1] = pwv2[i] + w[i] * v[i] * v[i];
    }
    auto interval_cost = [&](size_t i, size_t j) { // [i, j] inclusive
        const double W = pw[j + 1] - pw[i];
        if (W <= 0.0) return 0.0;
        const double A = pwv[j + 1] - pwv[i];
        const double Q = pwv2[j + 1] - pwv2[i];
        return std::max(0.0, Q - A * A / W);
    };

    const size_t kk = std::min<size_t>(k, n);
    const double inf = std::numeric_limits<double>::infinity();
    // cost[m][j]: optimal cost of first j+1 points with m+1 clusters
    std::vector<std::vector<double>> cost(kk, std::vector<double>(n, inf));
    std::vector<std::vector<size_t>> split(kk, std::vector<size_t>(n, 0));
    for (size_t j = 0; j < n; ++j) cost[0][j] = interval_cost(0, j);
    for (size_t m = 1; m < kk; ++m) {
        for (size_t j = m; j < n; ++j) {
            double best = inf;
            size_t best_s = m;
            for (size_t s = m; s <= j; ++s) { // cluster m covers [s, j]
                const double c = cost[m - 1][s - 1] + interval_cost(s, j);
                if (c < best) {
                    best = c;
                    best_s = s;
                }
            }
            cost[m][j] = best;
            split[m][j] = best_s;
        }
    }

    // backtrack the partition, then recompute centroids and the objective the
    // same way the Lloyd path does so the two are directly comparable
    size_t clusters_used = std::min(kk, n);
    std::vector<std::pair<size_t, size_t>> intervals;
    {
        size_t j = n - 1;
        size_t m = clusters_used - 1;
        while (true) {
            const size_t s = (m == 0) ? 0 : split[m][j];
            intervals.emplace_back(s, j);
            if (m == 0) break;
            j = s - 1;
            --m;
        }
        std::reverse(intervals.begin(), intervals.end());
    }

    DpOracleResult res;
    res.codebook.centroids.reserve(k);
    double obj = 0.0;
    for (const auto& [s, j] : intervals) {
        const double W = pw[j + 1] - pw[s];
        double mean;
        if (W > 0.0) {
            mean = (pwv[j + 1] - pwv[s]) / W;
        } else {
            double acc = 0.0;
            for (size_t i = s; i <= j; ++i) acc += v[i];
            mean = acc / double(j - s + 1);
        }
        const float c = static_cast<float>(mean);
        res.codebook.centroids.push_back(c);
        for (size_t i = s; i <= j; ++i) {
            const double d = v[i] - double(c);
            obj += w[i] * d * d;
        }
    }
    // pad to k entries when there are fewer points than clusters
    while (res.codebook.centroids.size() < k) {
        res.codebook.centroids.push_back(res.codebook.centroids.back());
    }
    std::sort(res.codebook.centroids.begin(), res.codebook.centroids.end());
    res.objective = obj;
    return res;
}

// ---------------------------------------------------------------------------
// round-to-nearest uniform baseline
// ---------------------------------------------------------------------------

RtnResult rtn_uniform(const std::vector<float>& values, uint32_t bits) {
    check(!values.empty(), errc::empty_input, "rtn: empty input");
    check(bits >= 1 && bits <= 8, errc::invalid_argument, "rtn: bits must be in 1..8");
    const uint32_t k = 1u << bits;

    float lo = values[0], hi = values[0];
    for (float x : values) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double step = (double(hi) - double(lo)) / (k - 1);

    RtnResult res;
    res.codebook.centroids.resize(k);
    for (uint32_t i = 0; i < k; ++i) {
        res.codebook.centroids[i] = static_cast<float>(double(lo) + step * i);
    }
    res.codebook.centroids[k - 1] = hi;

    res.assignment.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        uint32_t idx = 0;
        if (step > 0.0) {
            const double t = (double(values[i]) - double(lo)) / step;
            // round half up
            idx = static_cast<uint32_t>(std::floor(t + 0.5));
            idx = std::min(idx, k - 1);
        }
        res.assignment[i] = static_cast<uint16_t>(idx);
    }
    return res;
}

// ---------------------------------------------------------------------------
// channel-wise quantization
// ---------------------------------------------------------------------------

ChannelwiseResult quantize_channelwise(const WeightMatrix& matrix,
                                       const std::vector<float>& sens,
                                       const QuantConfig& cfg,
                                       const std::vector<uint8_t>& mask,
                                       CodebookMethod method) {
    matrix.validate();
    cfg.validate();
    const size_t total = matrix.size();
    check(sens.size() == total, errc::shape_mismatch,
          matrix.name + ": sensitivity shape mismatch");
    check(mask.empty() || mask.size() == total, errc::shape_mismatch,
          matrix.name + ": mask shape mismatch");
    uint32_t group_cols = matrix.cols;
    if (cfg.group_size > 0) {
        check(matrix.cols % cfg.group_size == 0, errc::invalid_argument,
              matrix.name + ": group_size does not divide cols");
        group_cols = cfg.group_size;
    }
    const uint32_t groups_per_row = matrix.cols / group_cols;
    const uint32_t k = cfg.levels();

    ChannelwiseResult res;
    res.groups_per_row = groups_per_row;
    res.codebooks.resize(size_t(matrix.rows) * groups_per_row);
    res.assignment.assign(total, kMaskedIndex);

    std::vector<double> group_obj(res.codebooks.size(), 0.0);
    std::vector<double> group_mse(res.codebooks.size(), 0.0);
    std::vector<uint8_t> group_failed(res.codebooks.size(), 0);

    KmeansOptions opt;
    opt.max_iters = cfg.kmeans_max_iters;
    opt.tol = cfg.kmeans_tol;

    // channels are independent problems; the result does not depend on
    // execution order because each group writes only its own slots
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int64_t g = 0; g < int64_t(res.codebooks.size()); ++g) {
        const uint32_t row = static_cast<uint32_t>(g / groups_per_row);
        const uint32_t grp = static_cast<uint32_t>(g % groups_per_row);
        const uint32_t c0 = grp * group_cols;

        std::vector<float> vals, wts;
        std::vector<uint32_t> cols_kept;
        vals.reserve(group_cols);
        for (uint32_t c = c0; c < c0 + group_cols; ++c) {
            const size_t idx = size_t(row) * matrix.cols + c;
            if (!mask.empty() && mask[idx]) continue;
            vals.push_back(matrix.values[idx]);
            wts.push_back(sens[idx]);
            cols_kept.push_back(c);
        }
        if (vals.empty()) {
            group_failed[g] = 1;
            continue;
        }

        Codebook cb;
        AssignmentVector assign;
        switch (method) {
            case CodebookMethod::weighted_kmeans: {
                KmeansResult r = weighted_kmeans_1d(vals, wts, k, opt);
                cb = std::move(r.codebook);
                assign = std::move(r.assignment);
                break;
            }
            case CodebookMethod::unweighted_kmeans: {
                std::vector<float> ones(vals.size(), 1.0f);
                KmeansResult r = weighted_kmeans_1d(vals, ones, k, opt);
                cb = std::move(r.codebook);
                assign = std::move(r.assignment);
                break;
            }
            case CodebookMethod::rtn: {
                RtnResult r = rtn_uniform(vals, cfg.bits);
                cb = std::move(r.codebook);
                assign = std::move(r.assignment);
                break;
            }
        }

        // pad tables that came back short (k > levels never happens; rtn and
        // kmeans both emit exactly k entries)
        double obj = 0.0, mse = 0.0;
        for (size_t i = 0; i < vals.size(); ++i) {
            const double d = double(vals[i]) - double(cb.centroids[assign[i]]);
            obj += double(wts[i]) * d * d;
            mse += d * d;
            res.assignment[size_t(row) * matrix.cols + cols_kept[i]] = assign[i];
        }
        group_obj[g] = obj;
        group_mse[g] = mse;
        res.codebooks[g] = std::move(cb);
    }

    for (size_t g = 0; g < group_failed.size(); ++g) {
        check(!group_failed[g], errc::empty_channel,
              matrix.name + ": mask covers an entire channel/group");
    }
    for (size_t g = 0; g < group_obj.size(); ++g) {
        res.weighted_objective += group_obj[g];
        res.unweighted_mse_sum += group_mse[g];
    }
    return res;
}

} // namespace dsq
