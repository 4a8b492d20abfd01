#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/common.hpp"

namespace sarvr::sensors {

// --- skeleton tracking -------------------------------------------------------------

inline constexpr std::size_t kJointCount = 32;
inline constexpr double kMaxRangeM = 2.5;
inline constexpr std::size_t kMaxPeople = 2;

/// Canonical lowercase joint names in body-tracking order.
const std::array<std::string_view, kJointCount>& joint_names();
/// Case-insensitive lookup.
std::optional<std::size_t> joint_index(std::string_view name);

struct Joint {
  std::string name;
  std::array<double, 3> position{};
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};
  friend bool operator==(const Joint&, const Joint&) = default;
};

struct Body {
  std::uint32_t body_id = 0;
  /// Indexed by joint_index().
  std::vector<Joint> joints;

  const std::array<double, 3>& pelvis() const { return joints.at(0).position; }
  /// Straight-line distance from the sensor to the pelvis, meters.
  double pelvis_distance() const;
  friend bool operator==(const Body&, const Body&) = default;
};

struct KinectFrame {
  /// Epoch ms.
  Millis t = 0;
  std::vector<Body> bodies;
  friend bool operator==(const KinectFrame&, const KinectFrame&) = default;
};

struct KinectParse {
  std::vector<KinectFrame> frames;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Timestamp-keyed object: {"<epoch ms>": {"bodies": [{body_id, joints: [{name,
/// position, orientation}]}]}}. A bare body array is accepted as the value.
/// Throws ParseError for invalid JSON and NotAnObject for any other top level.
KinectParse parse_kinect_file(std::string_view json_text);

nlohmann::json frame_entry_json(const KinectFrame& frame);
/// Serializes frames back into the timestamp-keyed layout.
std::string to_kinect_json(const std::vector<KinectFrame>& frames);

/// Body with all 32 joints placed around a pelvis position; used by the simulator and tests.
Body synthetic_body(std::uint32_t body_id, std::array<double, 3> pelvis);

struct Suppressed {
  std::size_t in_range = 0;
  friend bool operator==(const Suppressed&, const Suppressed&) = default;
};

using FilterResult = std::variant<KinectFrame, Suppressed>;

/// Drops bodies beyond max_range_m; more than max_people remaining suppresses the frame.
FilterResult filter_bodies(const KinectFrame& frame, double max_range_m = kMaxRangeM,
                           std::size_t max_people = kMaxPeople);

struct LabeledBody {
  Side side = Side::Left;
  Body body;
};

struct LabeledFrame {
  Millis t = 0;
  std::vector<LabeledBody> bodies;

  const LabeledBody* find(Side s) const;
};

/// Assigns Left/Right to at most two bodies. Smaller camera x is Left; once
/// seen, labels follow the nearest previous pelvis so crossings and brief
/// occlusions keep identities.
class SideLabeler {
 public:
  explicit SideLabeler(Millis forget_after = 2000) : forget_after_(forget_after) {}

  LabeledFrame label(const KinectFrame& frame);
  void reset();

 private:
  struct Track {
    std::array<double, 3> pelvis{};
    Millis seen_at = 0;
    std::uint32_t body_id = 0;
  };

  bool fresh(const std::optional<Track>& tr, Millis t) const { return tr && t - tr->seen_at <= forget_after_; }
  std::optional<Track>& track(Side s) { return s == Side::Left ? left_ : right_; }

  Millis forget_after_;
  std::optional<Track> left_;
  std::optional<Track> right_;
};

// --- wearable physiology -----------------------------------------------------------

enum class E4Channel : std::uint8_t { BVP, EDA, TEMP, ACC, HR };

inline constexpr std::array<E4Channel, 5> kE4Channels{E4Channel::BVP, E4Channel::EDA, E4Channel::TEMP,
                                                      E4Channel::ACC, E4Channel::HR};

std::string_view to_string(E4Channel c);
std::optional<E4Channel> e4_channel_from_string(std::string_view s);
/// Hz: BVP 64, EDA 4, TEMP 4, ACC 32, HR 1.
double nominal_rate(E4Channel c);
std::size_t columns(E4Channel c);

struct E4Series {
  E4Channel channel = E4Channel::EDA;
  /// Epoch seconds of the first sample.
  double start_epoch = 0.0;
  double sample_rate = 0.0;
  std::vector<std::vector<double>> samples;

  double timestamp(std::size_t i) const { return start_epoch + static_cast<double>(i) / sample_rate; }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Row 1 start epoch, row 2 sample rate (repeated per column for ACC), then
/// samples. Throws BadHeader and NonNumericSample naming the 1-based line.
E4Series parse_e4_csv(std::string_view text, E4Channel channel);
std::string to_csv(const E4Series& series);

}  // namespace sarvr::sensors
