#pragma once

#include <string>

#include "semdiff/metrics.hpp"
#include "semdiff/tensor.hpp"

namespace semdiff {

// Binary tensor container `.tns`:
//   magic "TNS1" | u32 rank | rank x u32 extents | little-endian f64 payload,
// row-major. All integers little-endian.
void save_tns(const Tensor& t, const std::string& path);
Tensor load_tns(const std::string& path);

// 8-bit binary PGM (P5) / PPM (P6). Pixel values map linearly to [0,1] on
// read; writes clamp to [0,1] and round to the nearest level.
FeatureMap read_pgm(const std::string& path);   // 1 channel
void write_pgm(const FeatureMap& x, const std::string& path);
FeatureMap read_ppm(const std::string& path);   // 3 channels
void write_ppm(const FeatureMap& x, const std::string& path);

/// Reads .tns, .pgm, or .ppm by extension into a FeatureMap.
FeatureMap read_image_any(const std::string& path);

// Label maps as raw 8-bit PGM: pixel byte == class index.
LabelMap read_label_pgm(const std::string& path);
void write_label_pgm(const LabelMap& lm, const std::string& path);

}  // namespace semdiff
