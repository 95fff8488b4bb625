#pragma once

#include "nlmvs/image.hpp"

#include <string>

namespace nlmvs {

/// PFM, 'PF' (RGB) / 'Pf' (gray) magic, scale line sign encodes endianness,
/// bottom-up row order. Non-finite values are rejected at load.
HdrImage read_pfm(const std::string& path);
void write_pfm(const HdrImage& image, const std::string& path);

/// Binary PGM (P5, maxval 255); nonzero = valid.
Mask read_pgm_mask(const std::string& path);
void write_pgm_mask(const Mask& mask, const std::string& path);

} // namespace nlmvs
