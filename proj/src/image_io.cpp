#include "spda/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace spda {

namespace {

constexpr char kVolMagic[16] = {'S', 'P', 'D', 'A', 'V', 'O', 'L', '1',
                                0, 0, 0, 0, 0, 0, 0, 0};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("volume file truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

std::vector<unsigned char> read_png_bytes(const std::filesystem::path& path, png_image& image,
                                          bool force_gray) {
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw std::runtime_error("cannot parse PNG " + path.string() + ": " + image.message);
  bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = (color && !force_gray) ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + msg);
  }
  return buffer;
}

void write_png_bytes(const std::filesystem::path& path, int h, int w, int channels,
                     const std::vector<unsigned char>& buffer) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

Tensor read_png(const std::filesystem::path& path) {
  png_image image;
  std::vector<unsigned char> buffer = read_png_bytes(path, image, false);
  int channels = image.format == PNG_FORMAT_RGB ? 3 : 1;
  Tensor t = Tensor::image2d(static_cast<int>(image.height), static_cast<int>(image.width),
                             channels);
  for (size_t i = 0; i < buffer.size(); ++i)
    t.data[i] = static_cast<float>(buffer[i]) / 255.0f;
  return t;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  if (image.is_3d()) throw std::invalid_argument("PNG output is 2D only");
  if (image.channels() != 1 && image.channels() != 3)
    throw std::invalid_argument("PNG output requires 1 or 3 channels");
  std::vector<unsigned char> buffer(image.data.size());
  for (size_t i = 0; i < buffer.size(); ++i) {
    float v = image.data[i];
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  write_png_bytes(path, image.height(), image.width(), image.channels(), buffer);
}

LabelMap read_label_png(const std::filesystem::path& path, int num_classes) {
  png_image image;
  std::vector<unsigned char> buffer = read_png_bytes(path, image, true);
  LabelMap l({static_cast<int>(image.height), static_cast<int>(image.width)}, num_classes);
  for (size_t i = 0; i < buffer.size(); ++i) l.data[i] = buffer[i];
  l.validate_ids();
  return l;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& label) {
  if (label.is_3d()) throw std::invalid_argument("PNG label output is 2D only");
  if (label.num_classes > 256)
    throw std::invalid_argument("8-bit label PNG supports at most 256 classes");
  std::vector<unsigned char> buffer(label.data.size());
  for (size_t i = 0; i < buffer.size(); ++i)
    buffer[i] = static_cast<unsigned char>(label.data[i]);
  write_png_bytes(path, label.height(), label.width(), 1, buffer);
}

Tensor read_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open volume " + path.string());
  char magic[16];
  is.read(magic, 16);
  if (!is || std::memcmp(magic, kVolMagic, 16) != 0)
    throw std::runtime_error("bad magic in volume " + path.string());
  uint32_t d = get_u32(is), h = get_u32(is), w = get_u32(is), c = get_u32(is);
  if (d == 0 || h == 0 || w == 0 || c == 0)
    throw std::runtime_error("degenerate extents in volume " + path.string());
  Tensor t = d == 1 ? Tensor::image2d(static_cast<int>(h), static_cast<int>(w),
                                      static_cast<int>(c))
                    : Tensor::volume3d(static_cast<int>(d), static_cast<int>(h),
                                       static_cast<int>(w), static_cast<int>(c));
  static_assert(sizeof(float) == 4);
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * 4));
  if (!is) throw std::runtime_error("volume file truncated: " + path.string());
  return t;
}

void write_volume(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot create volume " + path.string());
  os.write(kVolMagic, 16);
  put_u32(os, static_cast<uint32_t>(t.depth()));
  put_u32(os, static_cast<uint32_t>(t.height()));
  put_u32(os, static_cast<uint32_t>(t.width()));
  put_u32(os, static_cast<uint32_t>(t.channels()));
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * 4));
  if (!os) throw std::runtime_error("volume write failed: " + path.string());
}

LabelMap read_label_volume(const std::filesystem::path& path, int num_classes) {
  Tensor t = read_volume(path);
  if (t.channels() != 1) throw std::runtime_error("label volume must have C=1");
  LabelMap l(t.spatial_shape(), num_classes);
  for (size_t i = 0; i < t.data.size(); ++i)
    l.data[i] = static_cast<int32_t>(std::lround(t.data[i]));
  l.validate_ids();
  return l;
}

void write_label_volume(const std::filesystem::path& path, const LabelMap& label) {
  std::vector<int> shape = label.shape;
  shape.push_back(1);
  Tensor t(shape);
  for (size_t i = 0; i < label.data.size(); ++i)
    t.data[i] = static_cast<float>(label.data[i]);
  write_volume(path, t);
}

namespace {
bool has_ext(const std::filesystem::path& p, const char* ext) {
  return p.extension() == ext;
}
}  // namespace

Tensor read_image_any(const std::filesystem::path& path) {
  if (has_ext(path, ".png")) return read_png(path);
  if (has_ext(path, ".vol")) return read_volume(path);
  throw std::runtime_error("unsupported image format: " + path.string());
}

void write_image_any(const std::filesystem::path& path, const Tensor& image) {
  if (has_ext(path, ".png")) return write_png(path, image);
  if (has_ext(path, ".vol")) return write_volume(path, image);
  throw std::runtime_error("unsupported image format: " + path.string());
}

LabelMap read_label_any(const std::filesystem::path& path, int num_classes) {
  if (has_ext(path, ".png")) return read_label_png(path, num_classes);
  if (has_ext(path, ".vol")) return read_label_volume(path, num_classes);
  throw std::runtime_error("unsupported label format: " + path.string());
}

void write_label_any(const std::filesystem::path& path, const LabelMap& label) {
  if (has_ext(path, ".png")) return write_label_png(path, label);
  if (has_ext(path, ".vol")) return write_label_volume(path, label);
  throw std::runtime_error("unsupported label format: " + path.string());
}

}  // namespace spda
