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

#include "imaging/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "imaging/rng.hpp"

namespace aisam::img {

namespace {

using json = nlohmann::json;

constexpr int kMinClassPixels = 16;
// A shape must keep at least this share of its own area after occlusion.
constexpr double kMinVisibleFraction = 0.5;
constexpr double kNoiseSigma = 12.0;
constexpr int kMaxAttempts = 1000;

constexpr std::array<std::array<int, 3>, 8> kClassColors = {{
    {0, 0, 0},
    {220, 60, 60},
    {60, 200, 70},
    {70, 90, 230},
    {230, 210, 60},
    {200, 70, 210},
    {60, 210, 210},
    {240, 140, 40},
}};

enum class ShapeKind { kDisk, kRectangle, kTriangle };

ShapeKind kind_for(int class_id) { return static_cast<ShapeKind>((class_id - 1) % 3); }

struct Pt {
  double x, y;
};

double edge(Pt a, Pt b, Pt p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); }

// Rasterizes one shape of a class into a coverage grid.
std::vector<std::uint8_t> draw_shape(ShapeKind kind, int size, Rng& rng) {
  std::vector<std::uint8_t> cover(static_cast<std::size_t>(size) * size, 0);
  const double s = size;
  const double cx = rng.uniform(0.2 * s, 0.8 * s);
  const double cy = rng.uniform(0.2 * s, 0.8 * s);
  switch (kind) {
    case ShapeKind::kDisk: {
      const double r = rng.uniform(0.11 * s, 0.22 * s);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          if (dx * dx + dy * dy <= r * r) cover[static_cast<std::size_t>(y) * size + x] = 1;
        }
      break;
    }
    case ShapeKind::kRectangle: {
      const double hw = rng.uniform(0.1 * s, 0.2 * s), hh = rng.uniform(0.1 * s, 0.2 * s);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          if (std::abs(x + 0.5 - cx) <= hw && std::abs(y + 0.5 - cy) <= hh) {
            cover[static_cast<std::size_t>(y) * size + x] = 1;
          }
        }
      break;
    }
    case ShapeKind::kTriangle: {
      const double base = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::array<Pt, 3> v{};
      for (int k = 0; k < 3; ++k) {
        const double ang = base + k * 2.0 * std::numbers::pi / 3.0 + rng.uniform(-0.4, 0.4);
        const double r = rng.uniform(0.15 * s, 0.28 * s);
        v[k] = {cx + r * std::cos(ang), cy + r * std::sin(ang)};
      }
      const double area = edge(v[0], v[1], v[2]);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const Pt p{x + 0.5, y + 0.5};
          const double e0 = edge(v[0], v[1], p), e1 = edge(v[1], v[2], p), e2 = edge(v[2], v[0], p);
          const bool inside = area > 0 ? (e0 >= 0 && e1 >= 0 && e2 >= 0) : (e0 <= 0 && e1 <= 0 && e2 <= 0);
          if (inside) cover[static_cast<std::size_t>(y) * size + x] = 1;
        }
      break;
    }
  }
  return cover;
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

std::string make_id(int index, int count) {
  const int width = std::max<int>(4, static_cast<int>(std::to_string(std::max(count - 1, 0)).size()));
  auto s = std::to_string(index);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace

std::set<int> classes_in(const GrayImage& mask) {
  std::set<int> out;
  for (auto v : mask.pixels)
    if (v != 0) out.insert(v);
  return out;
}

void validate_sample(const SegSample& s, int num_classes) {
  if (s.image.width != s.mask.width || s.image.height != s.mask.height) {
    throw ValidationError("sample " + s.id + ": image and mask sizes differ");
  }
  for (auto v : s.mask.pixels) {
    if (v >= num_classes) {
      throw ValidationError("sample " + s.id + ": mask value " + std::to_string(v) + " >= class count " +
                            std::to_string(num_classes));
    }
  }
  if (s.present_classes != classes_in(s.mask)) {
    throw ValidationError("sample " + s.id + ": present classes disagree with mask");
  }
}

SegSample generate_sample(int index, int size, int num_classes, std::uint64_t seed) {
  if (size < 32) throw std::invalid_argument("generate: size must be >= 32");
  if (num_classes < 2 || num_classes > 8) throw std::invalid_argument("generate: num_classes must be in 2..8");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));

  const int fg = num_classes - 1;
  std::vector<int> pool(static_cast<std::size_t>(fg));
  for (int c = 0; c < fg; ++c) pool[static_cast<std::size_t>(c)] = c + 1;
  rng.shuffle(pool);
  const int shapes = rng.uniform_int(1, std::min(3, fg));
  pool.resize(static_cast<std::size_t>(shapes));

  const auto npx = static_cast<std::size_t>(size) * size;
  GrayImage mask(size, size);
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxAttempts) throw std::runtime_error("generate: could not place shapes");
    std::fill(mask.pixels.begin(), mask.pixels.end(), 0);
    std::vector<std::size_t> drawn;
    for (int cls : pool) {
      const auto cover = draw_shape(kind_for(cls), size, rng);
      std::size_t area = 0;
      for (std::size_t i = 0; i < npx; ++i) {
        if (cover[i]) {
          mask.pixels[i] = static_cast<std::uint8_t>(cls);  // later shapes sit on top
          ++area;
        }
      }
      drawn.push_back(area);
    }
    bool ok = true;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const auto visible = static_cast<std::size_t>(std::count(mask.pixels.begin(), mask.pixels.end(), pool[k]));
      ok = ok && visible >= kMinClassPixels && visible >= kMinVisibleFraction * static_cast<double>(drawn[k]);
    }
    if (ok) break;
  }

  // Background: a linear gradient between two muted grays in a random direction.
  std::array<double, 3> c0{}, c1{};
  const double g0 = rng.uniform(40, 120), g1 = rng.uniform(40, 120);
  for (int c = 0; c < 3; ++c) {
    c0[c] = g0 + rng.uniform(-10, 10);
    c1[c] = g1 + rng.uniform(-10, 10);
  }
  const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ux = std::cos(ang), uy = std::sin(ang);

  RgbImage image(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int cls = mask.at(x, y);
      const double t = std::clamp(0.5 + ((x + 0.5) / size - 0.5) * ux + ((y + 0.5) / size - 0.5) * uy, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double base = cls == 0 ? c0[c] + (c1[c] - c0[c]) * t : kClassColors[static_cast<std::size_t>(cls)][c];
        image.at(x, y, c) = clamp_byte(base + kNoiseSigma * rng.normal());
      }
    }

  SegSample s;
  s.id = std::to_string(index);
  s.image = std::move(image);
  s.mask = std::move(mask);
  s.present_classes = classes_in(s.mask);
  return s;
}

DatasetIndex generate_dataset(const std::filesystem::path& out_dir, int count, int size, int num_classes,
                              std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generate: count must be non-negative");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("generate: cannot create " + out_dir.string() + ": " + ec.message());

  DatasetIndex index{out_dir, {}, num_classes};
  std::string lines;
  for (int i = 0; i < count; ++i) {
    auto s = generate_sample(i, size, num_classes, seed);
    s.id = make_id(i, count);
    IndexEntry e{s.id, "images/" + s.id + ".ppm", "masks/" + s.id + ".pgm",
                 std::vector<int>(s.present_classes.begin(), s.present_classes.end())};
    write_file((out_dir / e.image).string(), write_ppm(s.image));
    write_file((out_dir / e.mask).string(), write_pgm(s.mask));
    lines += json{{"id", e.id}, {"image", e.image}, {"mask", e.mask}, {"classes", e.classes}}.dump() + "\n";
    index.entries.push_back(std::move(e));
  }
  write_file((out_dir / "index.jsonl").string(), lines);
  write_file((out_dir / "dataset.json").string(),
             json{{"count", count}, {"size", size}, {"num_classes", num_classes}, {"seed", seed}}.dump() + "\n");
  return index;
}

DatasetIndex read_index(const std::filesystem::path& root) {
  std::ifstream in(root / "index.jsonl");
  if (!in) throw NotFoundError("dataset index not found: " + (root / "index.jsonl").string());
  DatasetIndex index{root, {}, 0};
  std::set<std::string> ids;
  std::string line;
  int max_class = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    IndexEntry e;
    try {
      const auto j = json::parse(line);
      e.id = j.at("id").get<std::string>();
      e.image = j.at("image").get<std::string>();
      e.mask = j.at("mask").get<std::string>();
      e.classes = j.at("classes").get<std::vector<int>>();
    } catch (const json::exception& ex) {
      throw ValidationError("index.jsonl line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (!ids.insert(e.id).second) throw ValidationError("duplicate sample id " + e.id);
    for (const auto* rel : {&e.image, &e.mask}) {
      if (!std::filesystem::exists(root / *rel)) throw NotFoundError("missing file " + (root / *rel).string());
    }
    for (int c : e.classes) max_class = std::max(max_class, c);
    index.entries.push_back(std::move(e));
  }
  index.num_classes = max_class + 1;
  if (std::filesystem::exists(root / "dataset.json")) {
    const auto meta = json::parse(read_file((root / "dataset.json").string()));
    index.num_classes = meta.at("num_classes").get<int>();
  }
  return index;
}

SegSample load_sample(const DatasetIndex& index, const IndexEntry& e) {
  SegSample s;
  s.id = e.id;
  s.image = parse_ppm(read_file((index.root / e.image).string()));
  s.mask = parse_pgm(read_file((index.root / e.mask).string()));
  s.present_classes = classes_in(s.mask);
  validate_sample(s, index.num_classes);
  return s;
}

SegSample load_sample(const DatasetIndex& index, const std::string& id) {
  for (const auto& e : index.entries) {
    if (e.id == id) return load_sample(index, e);
  }
  throw NotFoundError("unknown sample id " + id);
}

}  // namespace aisam::img
