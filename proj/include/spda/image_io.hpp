#pragma once

#include <filesystem>

#include "spda/tensor.hpp"

namespace spda {

// 2D images: PNG, 8-bit grayscale or RGB, scaled to [0,1] on read and
// quantized to 1/255 steps on write.
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& image);

// Label maps as single-channel 8-bit PNG holding raw class ids.
LabelMap read_label_png(const std::filesystem::path& path, int num_classes);
void write_label_png(const std::filesystem::path& path, const LabelMap& label);

// Native raw volume format: 16-byte magic block starting with "SPDAVOL1",
// four little-endian u32 extents D,H,W,C, then D*H*W*C little-endian f32.
// Round-trips are bit-exact. 2D tensors are stored with D=1 and read back as
// 2D when keep_2d is requested via the stored depth.
Tensor read_volume(const std::filesystem::path& path);
void write_volume(const std::filesystem::path& path, const Tensor& t);

LabelMap read_label_volume(const std::filesystem::path& path, int num_classes);
void write_label_volume(const std::filesystem::path& path, const LabelMap& label);

// Dispatch by extension: .png for 2D, .vol for the raw format.
Tensor read_image_any(const std::filesystem::path& path);
void write_image_any(const std::filesystem::path& path, const Tensor& image);
LabelMap read_label_any(const std::filesystem::path& path, int num_classes);
void write_label_any(const std::filesystem::path& path, const LabelMap& label);

}  // namespace spda
