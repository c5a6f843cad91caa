#pragma once

#include <string>
#include <vector>

#include "dsq/nuq.hpp"
#include "dsq/packfmt.hpp"

namespace dsq {

// Pipeline settings echoed into the container next to the payload.
struct ContainerMeta {
    QuantConfig cfg;
    uint32_t hybrid_top_k = 10;
    uint32_t method_code = 0; // 0 weighted k-means, 1 unweighted, 2 rtn
};

struct QuantContainer {
    ContainerMeta meta;
    std::vector<QuantizedLayer> layers;
};

inline constexpr uint32_t kContainerVersion = 1;

// Binary container with an 8-byte magic, a version word, and a trailing
// CRC-32 over the payload. Write->read round-trips every field bit-exactly;
// corruption and version mismatches are hard errors. Layout in
// docs/FORMATS.md.
void save_container(const QuantContainer& c, const std::string& path);
QuantContainer load_container(const std::string& path);

} // namespace dsq
