#pragma once

#include <string>

#include "lsdeconv/volume.hpp"

namespace lsdeconv {

/// Native format: `<path>.json` sidecar header + `<path>.raw` little-endian
/// float32 payload. `path` is the stem; the two extensions are appended.
void save_volume(const Volume& v, const std::string& path);
Volume load_volume(const std::string& path);

/// Import a multi-page single-channel 16-bit unsigned TIFF as a Volume.
/// Pages become z-slices. Classic TIFF, both byte orders, strip layout.
Volume load_tiff_u16(const std::string& path);

/// 8-bit binary PGM, used for MIP exports.
void save_pgm(const Image2D& img, const std::string& path);

}  // namespace lsdeconv
