#include "dsq/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace dsq {

static constexpr char kContainerMagic[8] = {'D', 'S', 'Q', 'C', 'O', 'N', 'T', '1'};

namespace {

class Writer {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }
    const std::vector<uint8_t>& data() const { return buf_; }

private:
    std::vector<uint8_t> buf_;
};

class Reader {
public:
    Reader(const uint8_t* p, size_t n) : p_(p), end_(p + n) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        const uint8_t* p = take(2);
        return uint16_t(p[0]) | uint16_t(p[1]) << 8;
    }
    uint32_t u32() {
        const uint8_t* p = take(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    uint64_t u64() {
        const uint8_t* p = take(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const uint32_t n = u32();
        const uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    const uint8_t* take(size_t n) {
        check(size_t(end_ - p_) >= n, errc::truncated_payload, "container: truncated payload");
        const uint8_t* p = p_;
        p_ += n;
        return p;
    }
    bool done() const { return p_ == end_; }

private:
    const uint8_t* p_;
    const uint8_t* end_;
};

void write_layer(Writer& w, const QuantizedLayer& l) {
    w.str(l.name);
    w.u32(l.rows);
    w.u32(l.cols);

    w.u32(l.packed.bits);
    w.u32(l.packed.groups_per_row);
    for (float v : l.packed.luts) w.f32(v);
    w.u64(l.packed.payload.size());
    w.bytes(l.packed.payload.data(), l.packed.payload.size());

    w.u32(l.sparse.nnz());
    for (uint32_t v : l.sparse.row_ptr) w.u32(v);
    for (uint16_t v : l.sparse.col_idx) w.u16(v);
    for (float v : l.sparse.values) w.f32(v);

    w.u32(l.hybrid_top_k);
    w.f64(l.avg_bits);
}

QuantizedLayer read_layer(Reader& r) {
    QuantizedLayer l;
    l.name = r.str();
    l.rows = r.u32();
    l.cols = r.u32();

    l.packed.bits = r.u32();
    l.packed.groups_per_row = r.u32();
    l.packed.rows = l.rows;
    l.packed.cols = l.cols;
    check(l.packed.bits >= 1 && l.packed.bits <= 8, errc::malformed_header,
          "container: bad packed bits");
    check(l.packed.groups_per_row >= 1 && l.cols % l.packed.groups_per_row == 0,
          errc::malformed_header, "container: bad group count");
    const size_t lut_n = size_t(l.rows) * l.packed.groups_per_row * (1u << l.packed.bits);
    l.packed.luts.resize(lut_n);
    for (auto& v : l.packed.luts) v = r.f32();
    const uint64_t payload_n = r.u64();
    check(payload_n == size_t(l.rows) * l.packed.row_stride(), errc::truncated_payload,
          "container: payload length mismatch");
    const uint8_t* pb = r.take(payload_n);
    l.packed.payload.assign(pb, pb + payload_n);

    const uint32_t nnz = r.u32();
    l.sparse.rows = l.rows;
    l.sparse.cols = l.cols;
    l.sparse.row_ptr.resize(size_t(l.rows) + 1);
    for (auto& v : l.sparse.row_ptr) v = r.u32();
    l.sparse.col_idx.resize(nnz);
    for (auto& v : l.sparse.col_idx) v = r.u16();
    l.sparse.values.resize(nnz);
    for (auto& v : l.sparse.values) v = r.f32();

    l.hybrid_top_k = r.u32();
    l.avg_bits = r.f64();

    // the hybrid split is a deterministic function of the sparse part
    l.hybrid = hybrid_split(l.sparse, std::min<uint32_t>(l.hybrid_top_k, l.rows));
    l.validate();
    return l;
}

} // namespace

void save_container(const QuantContainer& c, const std::string& path) {
    Writer w;
    w.u32(c.meta.cfg.bits);
    w.f64(c.meta.cfg.sensitive_fraction);
    w.f64(c.meta.cfg.outlier_fraction);
    w.u32(c.meta.cfg.group_size);
    w.u32(c.meta.cfg.kmeans_max_iters);
    w.f64(c.meta.cfg.kmeans_tol);
    w.u64(c.meta.cfg.seed);
    w.u32(c.meta.hybrid_top_k);
    w.u32(c.meta.method_code);

    w.u32(static_cast<uint32_t>(c.layers.size()));
    for (const auto& l : c.layers) {
        l.validate();
        write_layer(w, l);
    }

    const auto& payload = w.data();
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, payload.data(), static_cast<uInt>(payload.size())));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(out.good(), errc::io_failure, "cannot open for write: " + path);
    out.write(kContainerMagic, sizeof(kContainerMagic));
    uint8_t head[4];
    for (int i = 0; i < 4; ++i) head[i] = uint8_t(kContainerVersion >> (8 * i));
    out.write(reinterpret_cast<const char*>(head), 4);
    out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    uint8_t tail[4];
    for (int i = 0; i < 4; ++i) tail[i] = uint8_t(crc >> (8 * i));
    out.write(reinterpret_cast<const char*>(tail), 4);
    check(out.good(), errc::io_failure, "write failed: " + path);
}

QuantContainer load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), errc::missing_file, "cannot open container: " + path);
    in.seekg(0, std::ios::end);
    const int64_t size = in.tellg();
    check(size >= 16, errc::malformed_header, path + ": file too small");
    in.seekg(0, std::ios::beg);
    std::vector<uint8_t> raw(static_cast<size_t>(size), 0);
    in.read(reinterpret_cast<char*>(raw.data()), size);
    check(in.gcount() == size, errc::io_failure, path + ": short read");

    check(std::memcmp(raw.data(), kContainerMagic, 8) == 0, errc::malformed_header,
          path + ": bad magic");
    uint32_t version = 0;
    for (int i = 3; i >= 0; --i) version = (version << 8) | raw[8 + i];
    check(version == kContainerVersion, errc::unsupported_version,
          path + ": unsupported container version " + std::to_string(version));

    const uint8_t* payload = raw.data() + 12;
    const size_t payload_len = size_t(size) - 16;
    uint32_t stored_crc = 0;
    for (int i = 3; i >= 0; --i) stored_crc = (stored_crc << 8) | raw[size_t(size) - 4 + i];
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, payload, static_cast<uInt>(payload_len)));
    check(crc == stored_crc, errc::checksum_mismatch, path + ": checksum mismatch");

    Reader r(payload, payload_len);
    QuantContainer c;
    c.meta.cfg.bits = r.u32();
    c.meta.cfg.sensitive_fraction = r.f64();
    c.meta.cfg.outlier_fraction = r.f64();
    c.meta.cfg.group_size = r.u32();
    c.meta.cfg.kmeans_max_iters = r.u32();
    c.meta.cfg.kmeans_tol = r.f64();
    c.meta.cfg.seed = r.u64();
    c.meta.hybrid_top_k = r.u32();
    c.meta.method_code = r.u32();

    const uint32_t n_layers = r.u32();
    for (uint32_t i = 0; i < n_layers; ++i) c.layers.push_back(read_layer(r));
    check(r.done(), errc::truncated_payload, path + ": trailing bytes in payload");
    return c;
}

} // namespace dsq
