#include <doctest.h>

#include <cstring>
#include <fstream>

#include "dsq/tensor.hpp"
#include "test_helpers.hpp"

using namespace dsq;
using dsq::test::TempFile;

namespace {

void write_raw(const std::string& path, uint64_t rows, uint64_t cols,
               const std::vector<float>& payload, uint32_t dtype = 1,
               const char* magic = "DSQT") {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    unsigned char header[24] = {0};
    std::memcpy(header, magic, 4);
    for (int i = 0; i < 4; ++i) header[4 + i] = static_cast<unsigned char>(dtype >> (8 * i));
    for (int i = 0; i < 8; ++i) header[8 + i] = static_cast<unsigned char>(rows >> (8 * i));
    for (int i = 0; i < 8; ++i) header[16 + i] = static_cast<unsigned char>(cols >> (8 * i));
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size() * 4));
}

} // namespace

TEST_CASE("load_weights parses a 2x3 tensor") {
    TempFile f("tensor");
    write_raw(f.path(), 2, 3, {1, 2, 3, 4, 5, 6});
    const WeightMatrix m = load_weights(f.path());
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.at(0, 0) == 1.0f);
    CHECK(m.at(1, 2) == 6.0f);
}

TEST_CASE("load_weights rejects NaN payload") {
    TempFile f("tensor");
    write_raw(f.path(), 1, 4, {1, 2, std::numeric_limits<float>::quiet_NaN(), 4});
    try {
        load_weights(f.path());
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::non_finite_value);
    }
}

TEST_CASE("load_weights rejects zero dimensions") {
    TempFile f("tensor");
    write_raw(f.path(), 0, 4, {});
    try {
        load_weights(f.path());
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::empty_dimension);
    }
}

TEST_CASE("load_weights errors") {
    SUBCASE("missing file") {
        try {
            load_weights("/nonexistent/path.tensor");
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::missing_file);
        }
    }
    SUBCASE("bad magic") {
        TempFile f("tensor");
        write_raw(f.path(), 1, 1, {1.0f}, 1, "XXXX");
        try {
            load_weights(f.path());
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::malformed_header);
        }
    }
    SUBCASE("bad dtype") {
        TempFile f("tensor");
        write_raw(f.path(), 1, 1, {1.0f}, 9);
        try {
            load_weights(f.path());
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::malformed_header);
        }
    }
    SUBCASE("declared dims must match payload length exactly") {
        TempFile f("tensor");
        write_raw(f.path(), 2, 3, {1, 2, 3, 4, 5}); // one float short
        try {
            load_weights(f.path());
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::truncated_payload);
        }
    }
    SUBCASE("dimension overflow") {
        TempFile f("tensor");
        write_raw(f.path(), uint64_t(1) << 40, uint64_t(1) << 40, {});
        try {
            load_weights(f.path());
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == errc::dimension_overflow);
        }
    }
}

TEST_CASE("save/load round-trips bit-exactly") {
    Rng rng(7);
    TempFile f("tensor");
    for (int it = 0; it < 20; ++it) {
        const uint32_t rows = uint32_t(1 + rng.below(16));
        const uint32_t cols = uint32_t(1 + rng.below(16));
        const WeightMatrix m = dsq::test::random_matrix("t", rows, cols, rng);
        save_weights(m, f.path());
        const WeightMatrix back = load_weights(f.path());
        CHECK(back.rows == m.rows);
        CHECK(back.cols == m.cols);
        CHECK(std::memcmp(back.values.data(), m.values.data(), m.values.size() * 4) == 0);
    }
}
