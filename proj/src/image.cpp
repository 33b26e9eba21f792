#include "okannet/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "okannet/error.hpp"

namespace okannet {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DecodeError("cannot open image " + path.string());
  f.seekg(0, std::ios::end);
  const auto size = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<unsigned char> data(static_cast<size_t>(size));
  if (size > 0 &&
      !f.read(reinterpret_cast<char*>(data.data()), size))
    throw DecodeError("cannot read image " + path.string());
  return data;
}

bool is_png(const std::vector<unsigned char>& d) {
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                       '\n'};
  return d.size() >= 8 && std::memcmp(d.data(), sig, 8) == 0;
}

bool is_jpeg(const std::vector<unsigned char>& d) {
  return d.size() >= 2 && d[0] == 0xff && d[1] == 0xd8;
}

Tensor planes_from_interleaved(const std::vector<unsigned char>& pixels,
                               int64_t channels, int64_t h, int64_t w) {
  Tensor out(Shape{channels, h, w});
  float* po = out.data();
  for (int64_t c = 0; c < channels; ++c)
    for (int64_t i = 0; i < h * w; ++i)
      po[c * h * w + i] =
          static_cast<float>(pixels[static_cast<size_t>(i * channels + c)]) /
          255.0f;
  return out;
}

Tensor decode_png(const std::vector<unsigned char>& data,
                  const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size()))
    throw DecodeError("bad PNG " + path.string() + ": " + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int64_t channels = gray ? 1 : 3;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DecodeError("bad PNG " + path.string() + ": " + image.message);
  }
  return planes_from_interleaved(pixels, channels, image.height, image.width);
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Tensor decode_jpeg(const std::vector<unsigned char>& data,
                   const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  std::vector<unsigned char> pixels;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("bad JPEG " + path.string() + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int64_t w = cinfo.output_width, h = cinfo.output_height;
  const int64_t channels = cinfo.output_components;
  pixels.resize(static_cast<size_t>(w * h * channels));
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row =
        pixels.data() + static_cast<size_t>(cinfo.output_scanline) *
                            static_cast<size_t>(w * channels);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return planes_from_interleaved(pixels, channels, h, w);
}

std::vector<unsigned char> interleave_quantized(const Tensor& img) {
  if (img.shape().rank() != 3 ||
      (img.shape()[0] != 1 && img.shape()[0] != 3))
    throw ShapeError("image writers expect [1,H,W] or [3,H,W], got " +
                     img.shape().str());
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  std::vector<unsigned char> pixels(static_cast<size_t>(c * h * w));
  const float* p = img.data();
  for (int64_t i = 0; i < h * w; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      float v = p[ch * h * w + i];
      v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      pixels[static_cast<size_t>(i * c + ch)] =
          static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  return pixels;
}

}  // namespace

Tensor decode_image(const std::filesystem::path& path) {
  const auto data = read_file(path);
  if (is_png(data)) return decode_png(data, path);
  if (is_jpeg(data)) return decode_jpeg(data, path);
  throw DecodeError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Tensor& img) {
  const auto pixels = interleave_quantized(img);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.shape()[2]);
  image.height = static_cast<png_uint_32>(img.shape()[1]);
  image.format =
      img.shape()[0] == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0,
                               pixels.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

void write_jpeg(const std::filesystem::path& path, const Tensor& img,
                int quality) {
  const auto pixels = interleave_quantized(img);
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
    throw IoError("cannot write JPEG " + path.string() + ": " + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = static_cast<int>(c);
  cinfo.in_color_space = c == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<unsigned char*>(
        pixels.data() +
        static_cast<size_t>(cinfo.next_scanline) * static_cast<size_t>(w * c));
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  if (std::fclose(f) != 0) throw IoError("failed writing " + path.string());
}

}  // namespace okannet
