#include <random>

#include <gtest/gtest.h>

#include "lipkit/annotations.hpp"
#include "support/generators.hpp"

using namespace lipkit;

namespace {

SpeakerSegment counted_segment(std::size_t t, std::size_t faces, std::size_t lips, std::size_t joint) {
  // Frames [0, joint) get both; then faces only; then lips only.
  SpeakerSegment s;
  s.segment_id = "fixture";
  s.speaker_id = "spk";
  s.total_frames = t;
  std::size_t i = 0;
  for (std::size_t k = 0; k < joint; ++k, ++i) s.frames.push_back({i, BBox{0, 0, 10, 10}, BBox{2, 2, 4, 4}});
  for (std::size_t k = joint; k < faces; ++k, ++i) s.frames.push_back({i, BBox{0, 0, 10, 10}, std::nullopt});
  for (std::size_t k = joint; k < lips; ++k, ++i) s.frames.push_back({i, std::nullopt, BBox{2, 2, 4, 4}});
  return s;
}

}  // namespace

TEST(Annotations, ParsesSegmentWithPartialFrames) {
  const auto doc = parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":3,"fps":25,"transcript":"你好",
      "frames":[{"i":0,"face":[0,0,80,80],"lip":[20,50,60,70]},
                {"i":2,"face":[1,1,81,81],"lip":null}]}]})");
  ASSERT_EQ(doc.segments.size(), 1u);
  const auto& s = doc.segments[0];
  EXPECT_EQ(s.total_frames, 3u);
  EXPECT_EQ(s.frames.size(), 2u);
  EXPECT_EQ(s.transcript, "你好");
  EXPECT_EQ(s.frames[0].lip, (BBox{20, 50, 60, 70}));
  EXPECT_FALSE(s.frames[1].lip);
  EXPECT_TRUE(doc.notes.empty());
}

TEST(Annotations, DefaultsAndUnknownFields) {
  const auto doc = parse_annotations(R"({"version":3,"segments":[{"segment_id":"a",
      "speaker_id":"S1","total_frames":1,"extra":{"x":1},"frames":[{"i":0,"conf":0.9}]}]})");
  const auto& s = doc.segments.at(0);
  EXPECT_DOUBLE_EQ(s.fps, 25.0);
  EXPECT_FALSE(s.transcript);
  EXPECT_FALSE(s.frames.at(0).face);
}

TEST(Annotations, OutOfOrderFramesAreSortedAndFlagged) {
  const auto doc = parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":5,"frames":[{"i":3},{"i":0},{"i":1}]}]})");
  const auto& f = doc.segments[0].frames;
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].frame_index, 0u);
  EXPECT_EQ(f[1].frame_index, 1u);
  EXPECT_EQ(f[2].frame_index, 3u);
  ASSERT_EQ(doc.notes.size(), 1u);
  EXPECT_NE(doc.notes[0].find("re-sorted"), std::string::npos);
}

TEST(Annotations, DegenerateBoxRejected) {
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":2,"frames":[{"i":0,"face":[10,0,10,20]}]}]})"),
               ValidationError);
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":2,"frames":[{"i":0,"lip":[0,30,10,20]}]}]})"),
               ValidationError);
}

TEST(Annotations, DuplicateFrameIndexRejected) {
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":4,"frames":[{"i":1},{"i":1}]}]})"),
               ValidationError);
}

TEST(Annotations, MissingTotalFramesRejected) {
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1","frames":[]}]})"),
               ValidationError);
}

TEST(Annotations, FrameIndexOutsideSegmentRejected) {
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":2,"frames":[{"i":2}]}]})"),
               ValidationError);
}

TEST(Annotations, NonPositiveFpsRejected) {
  EXPECT_THROW(parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1",
      "total_frames":2,"fps":0}]})"),
               ValidationError);
}

TEST(Annotations, MalformedJsonNamesLine) {
  try {
    parse_annotations("{\n\"segments\": [\n  {\"segment_id\": \"a\",,}\n]}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Annotations, WrongFieldTypeNamesField) {
  try {
    parse_annotations(R"({"segments":[{"segment_id":"a","speaker_id":"S1","total_frames":2,
        "frames":[{"i":0,"face":[0,0,"x",4]}]}]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("segments[0].frames[0].face[2]"), std::string::npos) << e.what();
  }
}

TEST(DetectionRates, FullDetection) {
  const auto r = detection_rates(counted_segment(10, 10, 10, 10));
  EXPECT_DOUBLE_EQ(r.face_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.lip_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.joint_rate, 1.0);
}

TEST(DetectionRates, HandCountedFixture) {
  const auto r = detection_rates(counted_segment(10, 6, 4, 4));
  EXPECT_DOUBLE_EQ(r.face_rate, 0.6);
  EXPECT_DOUBLE_EQ(r.lip_rate, 0.4);
  EXPECT_DOUBLE_EQ(r.joint_rate, 0.4);
}

TEST(DetectionRates, NothingAnnotated) {
  SpeakerSegment s;
  s.total_frames = 4;
  const auto r = detection_rates(s);
  EXPECT_EQ(r.face_rate, 0.0);
  EXPECT_EQ(r.lip_rate, 0.0);
  EXPECT_EQ(r.joint_rate, 0.0);
}

TEST(AnnotationProperties, JointRateBoundedAndRoundTrip) {
  std::mt19937_64 rng(11);
  std::vector<SpeakerSegment> segs;
  for (int k = 0; k < 200; ++k) {
    auto s = gen::segment(rng, 1 + rng() % 40, 0.7, 0.6, false);
    s.segment_id = "seg" + std::to_string(k);
    if (k % 3 == 0) s.transcript = "第" + std::to_string(k) + "句";
    s.fps = k % 2 ? 25.0 : 29.97;
    const auto r = detection_rates(s);
    EXPECT_LE(r.joint_rate, std::min(r.face_rate, r.lip_rate));
    segs.push_back(std::move(s));
  }
  const auto back = parse_annotations(serialize_annotations(segs));
  EXPECT_EQ(back.segments, segs);
  EXPECT_EQ(serialize_annotations(back.segments), serialize_annotations(segs));
}
