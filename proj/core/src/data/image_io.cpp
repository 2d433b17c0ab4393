// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/data/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "../binary_io.hpp"
#include "hyperfake/autograd.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake {
namespace {

// ---- PNG ---------------------------------------------------------------------
//
// libpng reports errors by longjmp. The functions that call setjmp below keep
// only trivially destructible locals alive across libpng calls.

struct PngSource {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

struct PngFailure {
  std::jmp_buf jump;
  char message[256];
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* failure = static_cast<PngFailure*>(png_get_error_ptr(png));
  std::snprintf(failure->message, sizeof failure->message, "%s", msg);
  std::longjmp(failure->jump, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (length > src->size - src->pos) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->data + src->pos, length);
  src->pos += length;
}

// Returns false with failure->message set on decode failure.
bool decode_png_raw(const std::string& bytes, DecodedImage* image, PngFailure* failure) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, failure, png_error_handler,
                                           png_warning_handler);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  PngSource src{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  if (setjmp(failure->jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &src, png_read_callback);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND, nullptr);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  png_bytepp rows = png_get_rows(png, info);

  image->width = width;
  image->height = height;
  image->channels = static_cast<std::size_t>(channels);
  image->bit_depth = depth == 16 ? 16 : 8;
  image->samples.resize(std::size_t(width) * height * channels);
  for (png_uint_32 y = 0; y < height; ++y) {
    const png_bytep row = rows[y];
    for (std::size_t i = 0; i < std::size_t(width) * channels; ++i) {
      std::uint16_t v = depth == 16
                            ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                            : row[i];
      image->samples[std::size_t(y) * width * channels + i] = v;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct PngSink {
  std::string* out;
};

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* sink = static_cast<PngSink*>(png_get_io_ptr(png));
  sink->out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_callback(png_structp) {}

bool encode_png_raw(std::string* out, std::size_t height, std::size_t width, int color_type,
                    int bit_depth, const unsigned char* packed, std::size_t row_bytes,
                    PngFailure* failure) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, failure, png_error_handler,
                                            png_warning_handler);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  PngSink sink{out};
  if (setjmp(failure->jump)) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &sink, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(packed + y * row_bytes));
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return true;
}

// ---- JPEG --------------------------------------------------------------------

struct JpegFailure {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_handler(j_common_ptr cinfo) {
  auto* failure = reinterpret_cast<JpegFailure*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, failure->message);
  std::longjmp(failure->jump, 1);
}

// Returns 0 on success, 1 on decode failure, 2 for non-colour input.
int decode_jpeg_raw(const std::string& bytes, DecodedImage* image, JpegFailure* failure) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&failure->base);
  failure->base.error_exit = jpeg_error_handler;
  if (setjmp(failure->jump)) {
    jpeg_destroy_decompress(&cinfo);
    return 1;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.num_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    return 2;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  image->width = cinfo.output_width;
  image->height = cinfo.output_height;
  image->channels = 3;
  image->bit_depth = 8;
  image->samples.resize(image->width * image->height * 3);
  // JSAMPLE rows are decoded into the tail of the sample buffer one at a time.
  JSAMPARRAY row = (*cinfo.mem->alloc_sarray)(reinterpret_cast<j_common_ptr>(&cinfo),
                                              JPOOL_IMAGE, image->width * 3, 1);
  while (cinfo.output_scanline < cinfo.output_height) {
    const std::size_t y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, row, 1);
    for (std::size_t i = 0; i < image->width * 3; ++i) {
      image->samples[y * image->width * 3 + i] = row[0][i];
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return 0;
}

bool has_prefix(const std::string& bytes, std::string_view magic) {
  return bytes.size() >= magic.size() && std::memcmp(bytes.data(), magic.data(), magic.size()) == 0;
}

}  // namespace

DecodedImage decode_image(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path.string());
  DecodedImage image;
  if (has_prefix(bytes, "\x89PNG\r\n\x1a\n")) {
    PngFailure failure{};
    if (!decode_png_raw(bytes, &image, &failure)) {
      throw IoError(path.string() + ": undecodable PNG: " + failure.message);
    }
  } else if (has_prefix(bytes, "\xFF\xD8\xFF")) {
    JpegFailure failure{};
    const int rc = decode_jpeg_raw(bytes, &image, &failure);
    if (rc == 1) throw IoError(path.string() + ": undecodable JPEG: " + failure.message);
    if (rc == 2) throw ChannelError(path.string() + ": JPEG is not a 3-channel colour image");
  } else {
    throw IoError(path.string() + ": not a PNG or JPEG file");
  }
  if (image.width == 0 || image.height == 0) throw IoError(path.string() + ": empty image");
  return image;
}

void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
               std::size_t channels, int bit_depth, std::span<const std::uint16_t> samples) {
  if (samples.size() != height * width * channels) throw ShapeError("write_png: sample count mismatch");
  int color_type = 0;
  switch (channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw ChannelError("write_png: unsupported channel count");
  }
  const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
  const std::size_t row_bytes = width * channels * bytes_per_sample;
  std::vector<unsigned char> packed(row_bytes * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bit_depth == 16) {
      packed[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
      packed[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xFF);
    } else {
      packed[i] = static_cast<unsigned char>(samples[i]);
    }
  }
  std::string encoded;
  PngFailure failure{};
  if (!encode_png_raw(&encoded, height, width, color_type, bit_depth, packed.data(), row_bytes,
                      &failure)) {
    throw IoError(path.string() + ": PNG encoding failed: " + failure.message);
  }
  detail::write_file_atomic(path.string(), encoded);
}

void write_png_rgb8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> interleaved) {
  std::vector<std::uint16_t> s(interleaved.begin(), interleaved.end());
  write_png(path, height, width, 3, 8, s);
}

void write_png_gray8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                     std::span<const std::uint8_t> pixels) {
  std::vector<std::uint16_t> s(pixels.begin(), pixels.end());
  write_png(path, height, width, 1, 8, s);
}

RGBFrame to_frame(const DecodedImage& image, Resolution resolution) {
  if (image.channels < 3) {
    throw ChannelError("image has " + std::to_string(image.channels) +
                       " channel(s); an RGB image is required");
  }
  if (resolution.height == 0 || resolution.width == 0) throw ShapeError("zero working resolution");
  const std::size_t side = std::min(image.height, image.width);
  const std::size_t y0 = (image.height - side) / 2;
  const std::size_t x0 = (image.width - side) / 2;
  const Tensor rows = ag::bilinear_matrix(side, resolution.height);
  const Tensor cols = ag::bilinear_matrix(side, resolution.width);
  const double inv_max = 1.0 / image.max_value();

  // Separable resize: first along x into side×W, then along y.
  std::vector<float> pixels(3 * resolution.height * resolution.width);
  std::vector<double> tmp(side * resolution.width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t ox = 0; ox < resolution.width; ++ox) {
        double acc = 0.0;
        for (std::size_t x = 0; x < side; ++x) {
          const double w = cols.at(ox, x);
          if (w == 0.0) continue;
          acc += w * image.samples[((y0 + y) * image.width + x0 + x) * image.channels + c];
        }
        tmp[y * resolution.width + ox] = acc;
      }
    for (std::size_t oy = 0; oy < resolution.height; ++oy)
      for (std::size_t ox = 0; ox < resolution.width; ++ox) {
        double acc = 0.0;
        for (std::size_t y = 0; y < side; ++y) {
          const double w = rows.at(oy, y);
          if (w == 0.0) continue;
          acc += w * tmp[y * resolution.width + ox];
        }
        const double v = std::clamp(acc * inv_max, 0.0, 1.0);
        pixels[(c * resolution.height + oy) * resolution.width + ox] = static_cast<float>(v);
      }
  }
  return RGBFrame(resolution.height, resolution.width, std::move(pixels));
}

RGBFrame load_frame(const std::filesystem::path& path, Resolution resolution) {
  return to_frame(decode_image(path), resolution);
}

RGBFrame load_frame(const DatasetManifest& manifest, const SampleRecord& record) {
  return load_frame(manifest.resolve(record), manifest.resolution);
}

}  // namespace hyperfake
