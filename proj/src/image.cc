// Copyright 2026 The SSB Codec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssb/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "ssb/error.h"

namespace ssb {

namespace {

constexpr int kMaxExtent = 1 << 15;

// Skips whitespace and '#' comments, then reads a decimal field.
int PpmField(std::span<const uint8_t> b, size_t& pos) {
  for (;;) {
    if (pos >= b.size()) Fail(ErrorCode::kFormat, "truncated PPM header");
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  long v = 0;
  const size_t start = pos;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
    v = v * 10 + (b[pos++] - '0');
    if (v > 1'000'000) Fail(ErrorCode::kFormat, "PPM header value too large");
  }
  if (pos == start) Fail(ErrorCode::kFormat, "malformed PPM header");
  return static_cast<int>(v);
}

void CheckExtent(int w, int h) {
  if (w < 1 || h < 1 || w > kMaxExtent || h > kMaxExtent) {
    Fail(ErrorCode::kDimension, "image extent out of range");
  }
}

struct PngReadState {
  std::span<const uint8_t> data;
  size_t pos = 0;
};

// libpng reports errors by longjmp; the message is kept for the exception
// thrown once control is back in C++ frames.
struct PngErrorState {
  char message[128] = "unknown error";
};

void PngError(png_structp png, png_const_charp msg) {
  auto* e = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(e->message, sizeof(e->message), "%s", msg);
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

void PngRead(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (s->data.size() - s->pos < n) png_error(png, "truncated data");
  std::memcpy(out, s->data.data() + s->pos, n);
  s->pos += n;
}

void PngWrite(png_structp png, png_bytep data, png_size_t n) {
  auto* o = static_cast<Bytes*>(png_get_io_ptr(png));
  o->insert(o->end(), data, data + n);
}

// Returns false on a libpng error. No C++ objects with destructors live in
// this frame, so the longjmp is safe.
bool PngReadHeader(png_structp png, png_infop info, int* w, int* h) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  *w = static_cast<int>(png_get_image_width(png, info));
  *h = static_cast<int>(png_get_image_height(png, info));
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  return true;
}

bool PngReadRows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  return true;
}

bool PngWriteRows(png_structp png, png_infop info, const Image* image) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, image->width, image->height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image->height; ++y) {
    png_write_row(png, image->rgb.data() + static_cast<size_t>(y) * image->width * 3);
  }
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

Image DecodePpm(std::span<const uint8_t> b) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') Fail(ErrorCode::kFormat, "not a binary PPM");
  size_t pos = 2;
  const int w = PpmField(b, pos);
  const int h = PpmField(b, pos);
  const int maxval = PpmField(b, pos);
  if (maxval != 255) Fail(ErrorCode::kFormat, "only 8-bit PPM is supported");
  if (pos >= b.size() || !std::isspace(b[pos])) Fail(ErrorCode::kFormat, "malformed PPM header");
  ++pos;
  CheckExtent(w, h);
  Image img(w, h);
  if (b.size() - pos < img.rgb.size()) Fail(ErrorCode::kFormat, "truncated PPM data");
  std::copy_n(b.begin() + pos, img.rgb.size(), img.rgb.begin());
  return img;
}

Bytes EncodePpm(const Image& image) {
  const std::string head =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

Image DecodePng(std::span<const uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    Fail(ErrorCode::kFormat, "not a PNG file");
  }
  PngErrorState err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    Fail(ErrorCode::kIo, "png: out of memory");
  }
  PngReadState state{bytes, 0};
  png_set_read_fn(png, &state, PngRead);
  int w = 0, h = 0;
  bool ok = PngReadHeader(png, info, &w, &h);
  if (ok && (w < 1 || h < 1 || w > kMaxExtent || h > kMaxExtent)) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kDimension, "image extent out of range");
  }
  if (ok && png_get_rowbytes(png, info) != static_cast<size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kFormat, "png: unsupported pixel layout");
  }
  Image img;
  if (ok) {
    img = Image(w, h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = img.rgb.data() + static_cast<size_t>(y) * w * 3;
    ok = PngReadRows(png, rows.data());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) Fail(ErrorCode::kFormat, std::string("png: ") + err.message);
  return img;
}

Bytes EncodePng(const Image& image) {
  PngErrorState err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    Fail(ErrorCode::kIo, "png: out of memory");
  }
  Bytes out;
  png_set_write_fn(png, &out, PngWrite, nullptr);
  const bool ok = PngWriteRows(png, info, &image);
  png_destroy_write_struct(&png, &info);
  if (!ok) Fail(ErrorCode::kIo, std::string("png: ") + err.message);
  return out;
}

Image ReadImage(const std::string& path) {
  const Bytes b = ReadFile(path);
  if (b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0) return DecodePng(b);
  return DecodePpm(b);
}

void WriteImage(const std::string& path, const Image& image) {
  const std::string ext = std::filesystem::path(path).extension().string();
  WriteFileAtomic(path, ext == ".png" || ext == ".PNG" ? EncodePng(image) : EncodePpm(image));
}

Tensor ImageToTensor(const Image& image) {
  Tensor t({3, image.height, image.width});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) t.at(c, y, x) = image.at(y, x, c) / 255.0f;
    }
  }
  return t;
}

Image TensorToImage(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) Fail(ErrorCode::kDimension, "expected a [3, H, W] tensor");
  Image img(t.dim(2), t.dim(1));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const float v = std::clamp(t.at(c, y, x), 0.0f, 1.0f);
        img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return img;
}

Bytes ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorCode::kIo, "cannot read " + path);
  return b;
}

void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      Fail(ErrorCode::kIo, "cannot write " + path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    Fail(ErrorCode::kIo, "cannot replace " + path + ": " + ec.message());
  }
}

}  // namespace ssb
