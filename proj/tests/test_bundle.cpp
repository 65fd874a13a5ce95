// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "mimoloc/errors.hpp"
#include "mimoloc/fxp.hpp"
#include "mimoloc/nn/bundle.hpp"

using namespace mimoloc;
using namespace mimoloc::nn;

namespace {

std::string serialise(const ModelBundle& b, Precision p) {
  std::ostringstream os(std::ios::binary);
  write_bundle(os, b, p);
  return os.str();
}

ModelBundle parse(const std::string& bytes, Precision* p = nullptr) {
  std::istringstream is(bytes, std::ios::binary);
  return read_bundle(is, p);
}

bool on_grid(const RealMatrix& m) {
  for (double v : m.flat())
    if (fxp::dequantize(fxp::quantize(v)) != v) return false;
  return true;
}

}  // namespace

TEST_CASE("random bundle shape") {
  const ModelBundle b = random_bundle(ModelHeader{}, 3);
  CHECK_NOTHROW(b.validate());
  for (Scenario s : kScenarios) CHECK(b.has_scenario(s));
  CHECK(b.slp.w.rows() == 3);
  CHECK(b.slp.w.cols() == 128);
  const auto& s1 = b.segment(SegmentId::S1);
  CHECK(s1.wq.rows() == 46);
  CHECK(s1.w1.cols() == 64);
  CHECK(s1.w2.rows() == 64);
  CHECK(s1.gamma == 1.0);
  CHECK(b.fcnn[0].w1.rows() == 1536);
  CHECK(b.fcnn[0].w2.cols() == 2);
  for (double v : s1.wq.flat()) CHECK(std::abs(v) <= 0.25);
  CHECK(random_bundle(ModelHeader{}, 3) == b);
  CHECK_FALSE(random_bundle(ModelHeader{}, 4) == b);
}

TEST_CASE("segment mapping") {
  CHECK(segment_for(Scenario::S1, 0) == SegmentId::S1);
  CHECK(segment_for(Scenario::S2, 0) == SegmentId::S21);
  CHECK(segment_for(Scenario::S2, 1) == SegmentId::S22);
  CHECK(segment_for(Scenario::S3, 0) == SegmentId::S31);
  CHECK(segment_for(Scenario::S3, 1) == SegmentId::S32);
  CHECK_THROWS(segment_for(Scenario::S1, 1));
}

TEST_CASE("int16 round trip is exact for snapped bundles") {
  const ModelBundle b = snap_to_q8_8(random_bundle(ModelHeader{}, 5));
  CHECK(on_grid(b.segment(SegmentId::S32).wo));
  Precision p = Precision::Float32;
  const ModelBundle back = parse(serialise(b, Precision::Int16), &p);
  CHECK(p == Precision::Int16);
  CHECK(back == b);
  // Int16 storage of an unsnapped bundle equals snapping.
  const ModelBundle raw = random_bundle(ModelHeader{}, 5);
  CHECK(parse(serialise(raw, Precision::Int16)) == b);
}

TEST_CASE("float32 round trip") {
  const ModelBundle b = random_bundle(ModelHeader{}, 6);
  Precision p = Precision::Int16;
  const ModelBundle back = parse(serialise(b, Precision::Float32), &p);
  CHECK(p == Precision::Float32);
  CHECK(back.header == b.header);
  for (std::size_t i = 0; i < b.slp.w.size(); ++i)
    CHECK(back.slp.w.flat()[i] == static_cast<double>(static_cast<float>(b.slp.w.flat()[i])));
  const ModelBundle snapped = snap_to_q8_8(b);
  CHECK(parse(serialise(snapped, Precision::Float32)) == snapped);
}

TEST_CASE("header fields survive") {
  ModelHeader h;
  h.activation = ActivationKind::SoftmaxInt;
  h.delay_bin = 7;
  h.window = 9;
  h.d_h = 32;
  const ModelBundle b = snap_to_q8_8(random_bundle(h, 8));
  CHECK(parse(serialise(b, Precision::Int16)).header == h);
}

TEST_CASE("partial bundles") {
  ModelBundle b = snap_to_q8_8(random_bundle(ModelHeader{}, 9));
  b.segment(SegmentId::S31) = EncoderSegment{};
  CHECK_FALSE(b.has_scenario(Scenario::S3));
  CHECK(b.has_scenario(Scenario::S2));
  const ModelBundle back = parse(serialise(b, Precision::Int16));
  CHECK(back == b);
  CHECK_FALSE(back.has_scenario(Scenario::S3));
}

TEST_CASE("validation errors") {
  ModelHeader h;
  h.heads = 4;  // 46 % 4 != 0
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = ModelHeader{};
  h.pool_p = 1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = ModelHeader{};
  h.delay_bin = 46;
  CHECK_THROWS_AS(h.validate(), ConfigError);

  ModelBundle b = random_bundle(ModelHeader{}, 10);
  b.segment(SegmentId::S1).wq = RealMatrix(46, 45);
  CHECK_THROWS_AS(b.validate(), ConfigError);
  b = random_bundle(ModelHeader{}, 10);
  b.fcnn[1].b2.push_back(0.0);
  CHECK_THROWS_AS(b.validate(), ConfigError);
}

TEST_CASE("malformed files") {
  const ModelBundle b = snap_to_q8_8(random_bundle(ModelHeader{}, 11));
  const std::string good = serialise(b, Precision::Int16);
  CHECK(good.substr(0, 4) == "AXLW");

  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse(bad), IoError);
  bad = good;
  bad[4] = 9;  // version
  CHECK_THROWS_AS(parse(bad), IoError);
  CHECK_THROWS_AS(parse(good.substr(0, good.size() - 1)), IoError);
  CHECK_THROWS_AS(parse(good.substr(0, 20)), IoError);
  CHECK_THROWS_AS(parse(""), IoError);
  CHECK_THROWS_AS(load_bundle("/nonexistent/bundle.bin"), IoError);
}

TEST_CASE("save and load through a file") {
  const ModelBundle b = snap_to_q8_8(random_bundle(ModelHeader{}, 12));
  const auto path = std::filesystem::temp_directory_path() / "mimoloc_test_bundle.bin";
  save_bundle(path.string(), b, Precision::Int16);
  CHECK(load_bundle(path.string()) == b);
  std::filesystem::remove(path);
}

TEST_CASE("activation names") {
  CHECK(parse_activation("sigmoid-bias") == ActivationKind::SigmoidBiasLUT);
  CHECK(parse_activation("SoftmaxInt") == ActivationKind::SoftmaxInt);
  CHECK(parse_activation(to_string(ActivationKind::SigmoidNormLUT)) == ActivationKind::SigmoidNormLUT);
  CHECK_THROWS_AS(parse_activation("relu"), ConfigError);
}
