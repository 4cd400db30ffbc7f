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

#include <openssl/evp.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "aisam/aisam.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kGolden = fs::path(AISAM_TEST_DATA) / "golden";
const std::string kCkpt = (kGolden / "model.ckpt").string();
const std::string kData = (kGolden / "data").string();

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("aisam_capi_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string unbase64(const std::string& s) {
  std::string out(s.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(s.data()), static_cast<int>(s.size()));
  out.resize(static_cast<std::size_t>(n) - (s.ends_with("==") ? 2 : s.ends_with("=") ? 1 : 0));
  return out;
}

std::string base64(const std::string& s) {
  std::string out(4 * ((s.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(s.data()), static_cast<int>(s.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

// Owns a string returned through a char** out-parameter.
struct Out {
  char* p = nullptr;
  ~Out() { aisam_free(p); }
  std::string str() const { return p ? p : ""; }
};

}  // namespace

TEST(CApi, VersionAndErrors) {
  EXPECT_STREQ(aisam_version(), "0.1.0");
  EXPECT_NE(aisam_last_error(), nullptr);
  EXPECT_EQ(aisam_generate_dataset(nullptr, 1, 32, 3, 0), AISAM_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(aisam_last_error()), "");
  const auto dir = scratch("errors");
  EXPECT_EQ(aisam_generate_dataset((dir / "d").c_str(), -1, 32, 3, 0), AISAM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(aisam_generate_dataset((dir / "d").c_str(), 2, 16, 3, 0), AISAM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(aisam_generate_dataset((dir / "d").c_str(), 2, 32, 9, 0), AISAM_ERR_INVALID_ARGUMENT);
  std::ofstream(dir / "file") << "x";
  EXPECT_EQ(aisam_generate_dataset((dir / "file" / "d").c_str(), 2, 32, 3, 0), AISAM_ERR_IO);
  aisam_free(nullptr);
}

TEST(CApi, EvaluateStatuses) {
  const auto dir = scratch("eval");
  Out report;
  ASSERT_EQ(aisam_evaluate(kData.c_str(), kCkpt.c_str(), R"({"split":"all"})", &report.p), AISAM_OK) << aisam_last_error();
  EXPECT_EQ(json::parse(report.str()), json::parse(slurp(kGolden / "eval.json")));
  Out gt;
  ASSERT_EQ(aisam_evaluate(kData.c_str(), kCkpt.c_str(), R"({"split":"all","classes":"gt"})", &gt.p), AISAM_OK);
  EXPECT_EQ(json::parse(gt.str()), json::parse(slurp(kGolden / "eval_gt.json")));
  Out r2;
  EXPECT_EQ(aisam_evaluate(kData.c_str(), (dir / "missing.ckpt").c_str(), nullptr, &r2.p), AISAM_ERR_IO);
  EXPECT_EQ(aisam_evaluate(kData.c_str(), kCkpt.c_str(), "{oops", &r2.p), AISAM_ERR_FORMAT);
  EXPECT_EQ(aisam_evaluate(kData.c_str(), kCkpt.c_str(), R"({"split":"sideways"})", &r2.p), AISAM_ERR_INVALID_ARGUMENT);
  std::ofstream(dir / "bad.ckpt") << "NOTACHECKPOINT";
  EXPECT_EQ(aisam_evaluate(kData.c_str(), (dir / "bad.ckpt").c_str(), nullptr, &r2.p), AISAM_ERR_FORMAT);
  EXPECT_NE(std::string(aisam_last_error()).find("magic"), std::string::npos);
  EXPECT_EQ(aisam_evaluate(nullptr, kCkpt.c_str(), nullptr, &r2.p), AISAM_ERR_INVALID_ARGUMENT);
  // The report pointer is optional.
  EXPECT_EQ(aisam_evaluate(kData.c_str(), kCkpt.c_str(), nullptr, nullptr), AISAM_OK);
}

TEST(CApi, TrainStatuses) {
  const auto dir = scratch("train");
  ASSERT_EQ(aisam_generate_dataset((dir / "d").c_str(), 4, 32, 3, 9), AISAM_OK);
  const std::string cfg = slurp(kGolden / "train.json");
  Out summary;
  ASSERT_EQ(aisam_train((dir / "d").c_str(), (dir / "m.ckpt").c_str(), cfg.c_str(), nullptr, &summary.p), AISAM_OK)
      << aisam_last_error();
  const auto log = json::parse(summary.str());
  ASSERT_TRUE(log.is_array());
  EXPECT_EQ(log.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "m.ckpt"));
  Out s2;
  EXPECT_EQ(aisam_train((dir / "d").c_str(), (dir / "x.ckpt").c_str(), R"({"learning_rate":1})", nullptr, &s2.p),
            AISAM_ERR_INVALID_ARGUMENT);
  auto j = json::parse(cfg);
  j["base_lr"] = 1e300;
  j["warmup_init_lr"] = 1e300;
  j["clip_norm"] = 0;
  j["max_steps"] = 0;
  EXPECT_EQ(aisam_train((dir / "d").c_str(), (dir / "x.ckpt").c_str(), j.dump().c_str(), nullptr, &s2.p),
            AISAM_ERR_NUMERIC);
  EXPECT_EQ(aisam_train((dir / "nothing").c_str(), (dir / "x.ckpt").c_str(), nullptr, nullptr, &s2.p), AISAM_ERR_NOT_FOUND);
  EXPECT_EQ(aisam_train((dir / "d").c_str(), (dir / "nodir" / "x.ckpt").c_str(), cfg.c_str(), nullptr, &s2.p), AISAM_ERR_IO);
}

TEST(CApi, PcmWritesCsv) {
  const auto dir = scratch("pcm");
  Out summary;
  ASSERT_EQ(aisam_pcm(kData.c_str(), kCkpt.c_str(), "box", 2, (dir / "m.csv").c_str(), &summary.p), AISAM_OK)
      << aisam_last_error();
  const auto j = json::parse(summary.str());
  EXPECT_EQ(j["pcm"].size(), 3u);
  EXPECT_EQ(j["ocm"].size(), 3u);
  EXPECT_GT(j["samples"].get<int>(), 0);
  EXPECT_FALSE(slurp(dir / "m.csv").empty());
  EXPECT_EQ(aisam_pcm(kData.c_str(), kCkpt.c_str(), "lasso", 2, (dir / "m.csv").c_str(), &summary.p),
            AISAM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(aisam_pcm(kData.c_str(), kCkpt.c_str(), "point", 0, (dir / "m.csv").c_str(), &summary.p),
            AISAM_ERR_INVALID_ARGUMENT);
}

TEST(CApi, GradCheckThreshold) {
  double worst = -1;
  Out report;
  ASSERT_EQ(aisam_grad_check(0, 1e-5, &worst, &report.p), AISAM_OK) << aisam_last_error();
  EXPECT_GE(worst, 0.0);
  EXPECT_LT(worst, 1e-5);
  EXPECT_TRUE(json::parse(report.str()).contains("cases"));
  Out strict;
  EXPECT_EQ(aisam_grad_check(0, 0.0, &worst, &strict.p), AISAM_ERR_CHECK_FAILED);
  EXPECT_FALSE(strict.str().empty());
}

TEST(CApi, ServiceHandleAndInfer) {
  aisam_service* svc = nullptr;
  EXPECT_EQ(aisam_service_create("/nonexistent/model.ckpt", 4, &svc), AISAM_ERR_IO);
  ASSERT_EQ(aisam_service_create(kCkpt.c_str(), 4, &svc), AISAM_OK);
  int status = 0;
  Out health;
  ASSERT_EQ(aisam_service_handle(svc, "GET", "/health", "", 0, &status, &health.p), AISAM_OK);
  EXPECT_EQ(status, 200);
  Out missing;
  ASSERT_EQ(aisam_service_handle(svc, "GET", "/missing", "", 0, &status, &missing.p), AISAM_OK);
  EXPECT_EQ(status, 404);

  const auto image_path = kGolden / "data" / "images" / "0003.ppm";
  ASSERT_TRUE(fs::exists(image_path));
  const std::string body = json{{"image", base64(slurp(image_path))}, {"classes", {1, 2}}}.dump();
  Out seg;
  ASSERT_EQ(aisam_service_handle(svc, "POST", "/segment", body.data(), body.size(), &status, &seg.p), AISAM_OK);
  ASSERT_EQ(status, 200);

  const auto dir = scratch("infer");
  const auto prefix = (dir / "out").string();
  Out resp;
  ASSERT_EQ(aisam_infer(svc, image_path.c_str(), R"({"classes":[1,2]})", prefix.c_str(), &resp.p), AISAM_OK)
      << aisam_last_error();
  EXPECT_EQ(resp.str(), seg.str());
  EXPECT_EQ(slurp(prefix + ".json"), seg.str());
  const auto j = json::parse(seg.str());
  EXPECT_EQ(slurp(prefix + "_labels.pgm"), unbase64(j["labels"]));
  for (const auto& m : j["masks"]) {
    EXPECT_EQ(slurp(prefix + "_class" + std::to_string(m["class_id"].get<int>()) + ".pgm"), unbase64(m["pgm"]));
  }
  Out bad;
  EXPECT_EQ(aisam_infer(svc, image_path.c_str(), R"({"classes":[7]})", prefix.c_str(), &bad.p), AISAM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(aisam_infer(svc, (dir / "none.ppm").c_str(), nullptr, prefix.c_str(), &bad.p), AISAM_ERR_IO);
  aisam_service_destroy(svc);
}
