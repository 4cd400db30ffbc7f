// Copyright 2026 The aisam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "imaging/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace aisam::img {

namespace {

struct Header {
  int width;
  int height;
  std::size_t payload_offset;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    const auto start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw FormatError(std::string("netpbm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("netpbm: missing ") + what);
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 2;
};

Header parse_header(std::string_view bytes, std::string_view magic, std::size_t channels) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != magic) {
    throw FormatError("netpbm: bad magic, expected " + std::string(magic));
  }
  HeaderReader r(bytes);
  const int w = r.read_int("width");
  const int h = r.read_int("height");
  const int maxval = r.read_int("maxval");
  if (w <= 0 || h <= 0) throw FormatError("netpbm: image dimensions must be positive");
  if (maxval != 255) throw FormatError("netpbm: maxval must be 255, got " + std::to_string(maxval));
  if (r.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos()]))) {
    throw FormatError("netpbm: missing whitespace after maxval");
  }
  r.advance();
  const auto need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - r.pos() < need) {
    throw FormatError("netpbm: truncated payload, expected " + std::to_string(need) + " bytes at offset " +
                      std::to_string(r.pos()) + ", found " + std::to_string(bytes.size() - r.pos()));
  }
  return {w, h, r.pos()};
}

std::string header(const char* magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

std::string write_ppm(const RgbImage& image) {
  auto out = header("P6", image.width, image.height);
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

RgbImage parse_ppm(std::string_view bytes) {
  const auto h = parse_header(bytes, "P6", 3);
  RgbImage img(h.width, h.height);
  std::copy_n(bytes.data() + h.payload_offset, img.pixels.size(), reinterpret_cast<char*>(img.pixels.data()));
  return img;
}

std::string write_pgm(const GrayImage& image) {
  auto out = header("P5", image.width, image.height);
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

GrayImage parse_pgm(std::string_view bytes) {
  const auto h = parse_header(bytes, "P5", 1);
  GrayImage img(h.width, h.height);
  std::copy_n(bytes.data() + h.payload_offset, img.pixels.size(), reinterpret_cast<char*>(img.pixels.data()));
  return img;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace aisam::img
