#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dsq/common.hpp"
#include "dsq/tensor.hpp"

namespace dsq::test {

inline WeightMatrix random_matrix(const std::string& name, uint32_t rows, uint32_t cols,
                                  Rng& rng, double scale = 1.0) {
    WeightMatrix m;
    m.name = name;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(size_t(rows) * cols);
    for (auto& v : m.values) v = static_cast<float>(rng.normal() * scale);
    return m;
}

inline std::vector<float> random_weights(size_t n, Rng& rng) {
    std::vector<float> w(n);
    for (auto& v : w) v = static_cast<float>(rng.uniform());
    return w;
}

// scratch file that removes itself
class TempFile {
public:
    explicit TempFile(const std::string& stem) {
        path_ = (std::filesystem::temp_directory_path() /
                 (stem + "." + std::to_string(counter_++) + ".tmp"))
                    .string();
    }
    ~TempFile() { std::remove(path_.c_str()); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    static inline int counter_ = 0;
};

} // namespace dsq::test
