#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dsq {

// Error taxonomy. The CLI maps these onto exit codes:
//   Argument -> 2, Data -> 3, Internal -> 4.
enum class errc {
    missing_file,
    malformed_header,
    non_finite_value,
    empty_dimension,
    dimension_overflow,
    truncated_payload,
    checksum_mismatch,
    unsupported_version,
    shape_mismatch,
    empty_input,
    invalid_argument,
    fraction_overflow,   // decomposition would mark an entire matrix
    empty_channel,       // mask covers an entire channel/group
    io_failure,
    internal,
};

enum class error_class { argument, data, internal };

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    errc code() const { return code_; }

    error_class classify() const {
        switch (code_) {
            case errc::invalid_argument:
            case errc::empty_input:
            case errc::shape_mismatch:
            case errc::fraction_overflow:
                return error_class::argument;
            case errc::internal:
                return error_class::internal;
            default:
                return error_class::data;
        }
    }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

inline void check(bool cond, errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

// Deterministic RNG used everywhere seeds appear. mt19937_64 output is fixed
// by the standard; the distributions below avoid the implementation-defined
// std::*_distribution so streams are reproducible byte-for-byte.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return gen_() % n; }

    // standard normal, Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Student-t with nu degrees of freedom: N(0,1) / sqrt(chi2_nu / nu)
    double student_t(double nu) {
        double z = normal();
        double chi2 = 0.0;
        // chi2_nu as sum of squared normals for integer nu (small nu only)
        int k = static_cast<int>(nu);
        for (int i = 0; i < k; ++i) {
            double g = normal();
            chi2 += g * g;
        }
        return z / std::sqrt(chi2 / nu);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline bool is_finite(float v) { return std::isfinite(v); }

} // namespace dsq
