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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "imaging/dataset.hpp"
#include "imaging/netpbm.hpp"
#include "imaging/rng.hpp"
#include "support.hpp"

namespace img = aisam::img;
namespace fs = std::filesystem;
using aisam::testing::scratch_dir;

namespace {

img::RgbImage random_rgb(int w, int h, std::uint64_t seed) {
  aisam::Rng rng(seed);
  img::RgbImage im(w, h);
  for (auto& p : im.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return im;
}

img::GrayImage random_gray(int w, int h, std::uint64_t seed) {
  aisam::Rng rng(seed);
  img::GrayImage im(w, h);
  for (auto& p : im.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return im;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = img::read_file(e.path().string());
  }
  return out;
}

}  // namespace

TEST(Ppm, SmallestImage) {
  const std::string bytes = std::string("P6\n2 1\n255\n") + std::string("\x01\x02\x03\xfd\xfe\xff", 6);
  const auto im = img::parse_ppm(bytes);
  EXPECT_EQ(im.width, 2);
  EXPECT_EQ(im.height, 1);
  EXPECT_EQ(im.at(0, 0, 0), 1);
  EXPECT_EQ(im.at(1, 0, 2), 255);
  EXPECT_EQ(img::write_ppm(im), bytes);
}

TEST(Ppm, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto im = random_rgb(64, 64, seed);
    const auto bytes = img::write_ppm(im);
    EXPECT_EQ(bytes.substr(0, 13), "P6\n64 64\n255\n");
    EXPECT_EQ(bytes.size(), 13u + 64 * 64 * 3);
    const auto back = img::parse_ppm(bytes);
    EXPECT_EQ(back, im);
    EXPECT_EQ(img::write_ppm(back), bytes);
  }
}

TEST(Ppm, HeaderCommentsAndWhitespaceCanonicalize) {
  const std::string payload(3, '\x07');
  const auto im = img::parse_ppm("P6 # made by hand\n 1\t1\n# maxval next\n255\n" + payload);
  EXPECT_EQ(img::write_ppm(im), "P6\n1 1\n255\n" + payload);
}

TEST(Ppm, Errors) {
  EXPECT_THROW(img::parse_ppm("P5\n1 1\n255\n\x01"), img::FormatError);
  EXPECT_THROW(img::parse_ppm("P6\n2 2\n255\n\x01\x02"), img::FormatError);
  EXPECT_THROW(img::parse_ppm("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06"), img::FormatError);
  EXPECT_THROW(img::parse_ppm("P6\n1 1\n15\n\x01\x02\x03"), img::FormatError);
  EXPECT_THROW(img::parse_ppm(""), img::FormatError);
  EXPECT_THROW(img::parse_ppm("P6\n0 1\n255\n"), img::FormatError);
}

TEST(Ppm, TruncationReportsOffset) {
  try {
    img::parse_ppm("P6\n2 2\n255\n\x01\x02");
    FAIL() << "expected FormatError";
  } catch (const img::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 11"), std::string::npos) << e.what();
  }
}

TEST(Pgm, SmallestImage) {
  const std::string bytes = std::string("P5\n1 1\n255\n") + '\x2a';
  const auto im = img::parse_pgm(bytes);
  EXPECT_EQ(im.width, 1);
  EXPECT_EQ(im.at(0, 0), 42);
  EXPECT_EQ(img::write_pgm(im), bytes);
}

TEST(Pgm, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto im = random_gray(17 + static_cast<int>(seed % 5), 64, seed);
    const auto bytes = img::write_pgm(im);
    EXPECT_EQ(img::parse_pgm(bytes), im);
    EXPECT_EQ(img::write_pgm(img::parse_pgm(bytes)), bytes);
  }
}

TEST(Pgm, Errors) {
  EXPECT_THROW(img::parse_pgm("P6\n1 1\n255\n\x01\x02\x03"), img::FormatError);
  EXPECT_THROW(img::parse_pgm("P5\n3 3\n255\n\x01"), img::FormatError);
  EXPECT_THROW(img::parse_pgm("P5\n1 1\n1\n\x01"), img::FormatError);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(img::read_file("/nonexistent/aisam/x.ppm"), img::IoError);
  EXPECT_THROW(img::write_file("/nonexistent/aisam/x.ppm", "x"), img::IoError);
}

TEST(Rng, SeedDeterminism) {
  aisam::Rng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next();
    EXPECT_EQ(va, b.next());
    EXPECT_NE(va, c.next());
  }
  EXPECT_EQ(aisam::derive_seed(1, 2), aisam::derive_seed(1, 2));
  EXPECT_NE(aisam::derive_seed(1, 2), aisam::derive_seed(2, 1));
}

TEST(Rng, UniformIntCoversRange) {
  aisam::Rng rng(1);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.uniform_int(2, 6);
    ASSERT_GE(v, 2);
    ASSERT_LE(v, 6);
    ++seen[static_cast<std::size_t>(v - 2)];
  }
  for (int n : seen) EXPECT_GT(n, 100);
}

TEST(Dataset, GenerationIsByteDeterministic) {
  const auto a = scratch_dir("gen_a"), b = scratch_dir("gen_b");
  img::generate_dataset(a, 1, 64, 3, 7);
  img::generate_dataset(b, 1, 64, 3, 7);
  const auto ta = read_tree(a), tb = read_tree(b);
  EXPECT_EQ(ta.size(), 4u);  // index.jsonl, dataset.json, one image, one mask
  EXPECT_EQ(ta, tb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Dataset, SeedChangesContent) {
  EXPECT_NE(img::generate_sample(0, 64, 4, 1).image, img::generate_sample(0, 64, 4, 2).image);
  EXPECT_EQ(img::generate_sample(3, 64, 4, 1).mask, img::generate_sample(3, 64, 4, 1).mask);
}

TEST(Dataset, FiveHundredSamplesAllParseAndMeetAreaFloor) {
  const auto root = scratch_dir("gen500");
  const auto index = img::generate_dataset(root, 500, 64, 4, 0);
  const auto reread = img::read_index(root);
  ASSERT_EQ(reread.entries.size(), 500u);
  EXPECT_EQ(reread.num_classes, 4);
  std::vector<int> shape_counts(4, 0);
  for (const auto& e : reread.entries) {
    const auto s = img::load_sample(reread, e);
    EXPECT_EQ(s.image.width, 64);
    EXPECT_EQ(s.mask.height, 64);
    std::vector<int> area(256, 0);
    for (auto v : s.mask.pixels) ++area[v];
    std::vector<int> present;
    for (int c = 1; c < 256; ++c) {
      if (area[static_cast<std::size_t>(c)] == 0) continue;
      EXPECT_LT(c, 4);
      EXPECT_GE(area[static_cast<std::size_t>(c)], 16) << "sample " << e.id << " class " << c;
      present.push_back(c);
    }
    EXPECT_EQ(present, e.classes);
    ASSERT_GE(present.size(), 1u);
    ASSERT_LE(present.size(), 3u);
    ++shape_counts[present.size()];
  }
  // All three shape counts occur.
  EXPECT_GT(shape_counts[1], 0);
  EXPECT_GT(shape_counts[2], 0);
  EXPECT_GT(shape_counts[3], 0);
  fs::remove_all(root);
}

TEST(Dataset, IndexLineSchema) {
  const auto root = scratch_dir("schema");
  img::generate_dataset(root, 12, 32, 3, 1);
  std::ifstream in(root / "index.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.size(), 4u);
    const auto id = j.at("id").get<std::string>();
    EXPECT_EQ(j.at("image"), "images/" + id + ".ppm");
    EXPECT_EQ(j.at("mask"), "masks/" + id + ".pgm");
    EXPECT_TRUE(j.at("classes").is_array());
    ++n;
  }
  EXPECT_EQ(n, 12);
  fs::remove_all(root);
}

TEST(Dataset, LoadSample) {
  const auto root = scratch_dir("load");
  auto index = img::generate_dataset(root, 3, 32, 3, 2);
  const auto& e = index.entries[1];
  const auto s = img::load_sample(index, e.id);
  EXPECT_EQ(s.id, e.id);
  EXPECT_EQ(std::vector<int>(s.present_classes.begin(), s.present_classes.end()), e.classes);
  EXPECT_THROW(img::load_sample(index, "nope"), img::NotFoundError);

  img::GrayImage bad(32, 32);
  bad.at(3, 3) = 3;
  img::write_file((root / e.mask).string(), img::write_pgm(bad));
  EXPECT_THROW(img::load_sample(index, e.id), img::ValidationError);
  fs::remove_all(root);
}

TEST(Dataset, ReadIndexErrors) {
  const auto root = scratch_dir("badindex");
  EXPECT_THROW(img::read_index(root), img::NotFoundError);
  img::write_file((root / "index.jsonl").string(), "{\"id\":\"a\",\"image\":\"images/a.ppm\",\"mask\":\"m.pgm\",\"classes\":[]}\n");
  EXPECT_THROW(img::read_index(root), img::NotFoundError);
  img::write_file((root / "index.jsonl").string(), "not json\n");
  EXPECT_THROW(img::read_index(root), img::ValidationError);
  fs::remove_all(root);
}

TEST(Dataset, ArgumentChecks) {
  const auto root = scratch_dir("args");
  EXPECT_THROW(img::generate_dataset(root, 1, 16, 3, 0), std::invalid_argument);
  EXPECT_THROW(img::generate_dataset(root, 1, 64, 9, 0), std::invalid_argument);
  EXPECT_THROW(img::generate_dataset(root, 1, 64, 1, 0), std::invalid_argument);
  img::write_file((root / "file").string(), "x");
  EXPECT_THROW(img::generate_dataset(root / "file" / "sub", 1, 64, 3, 0), img::IoError);
  fs::remove_all(root);
}

TEST(Dataset, OcclusionKeepsMasksDisjointAndColoursDistinct) {
  // Each class has its own base colour; class pixels average near it.
  for (int i = 0; i < 20; ++i) {
    const auto s = img::generate_sample(i, 64, 8, 11);
    std::map<int, std::array<double, 4>> acc;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        auto& a = acc[s.mask.at(x, y)];
        for (int c = 0; c < 3; ++c) a[static_cast<std::size_t>(c)] += s.image.at(x, y, c);
        a[3] += 1;
      }
    EXPECT_EQ(s.present_classes, img::classes_in(s.mask));
    EXPECT_NO_THROW(img::validate_sample(s, 8));
    for (auto a = acc.begin(); a != acc.end(); ++a)
      for (auto b = std::next(a); b != acc.end(); ++b) {
        if (a->first == 0) continue;
        double d2 = 0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double diff = a->second[c] / a->second[3] - b->second[c] / b->second[3];
          d2 += diff * diff;
        }
        EXPECT_GT(std::sqrt(d2), 40.0) << "classes " << a->first << " and " << b->first;
      }
  }
}
