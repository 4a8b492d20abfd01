#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sarvr {

/// Milliseconds on the session's monotonic clock (or epoch ms where noted).
using Millis = std::int64_t;

enum class Side : std::uint8_t { Left, Right };
enum class Target : std::uint8_t { Left, Right, Both };
enum class WandColor : std::uint8_t { Red, Blue };

constexpr Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
constexpr Target target_of(Side s) { return s == Side::Left ? Target::Left : Target::Right; }

// Left participant always holds the red wand.
constexpr WandColor wand_color_for(Side s) { return s == Side::Left ? WandColor::Red : WandColor::Blue; }
constexpr Side side_for(WandColor c) { return c == WandColor::Red ? Side::Left : Side::Right; }

std::string_view to_string(Side s);
std::string_view to_string(Target t);
std::string_view to_string(WandColor c);
std::optional<Side> side_from_string(std::string_view s);
std::optional<Target> target_from_string(std::string_view s);
std::optional<WandColor> wand_color_from_string(std::string_view s);

enum class ErrorCode {
  InvalidConfig,
  IllegalTransition,
  ClockRegression,
  ActivityNotRunning,
  InvalidChart,
  NoteAlreadyJudged,
  EventOutOfOrder,
  WrongRole,
  UnknownSegment,
  InvalidCanvas,
  UnknownWord,
  UnknownLetterId,
  RoundIncomplete,
  UnknownCode,
  UnsupportedAdapter,
  InvalidVocabulary,
  ConnectFailed,
  AuthFailed,
  Disconnected,
  AdapterMismatch,
  BadMagic,
  BadCrc,
  UnknownKind,
  ShortFrame,
  BadField,
  NonUnitQuaternion,
  NotAnObject,
  BadHeader,
  NonNumericSample,
  IoFailure,
  UnsortedSource,
  MissingStream,
  UploadFailed,
  ChecksumMismatch,
  BadItemCount,
  OutOfRange,
  UnmatchedParticipant,
  AllZeroDifferences,
  ZeroDuration,
  BadAddress,
  NotFound,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Whole-field parse after trimming; rejects trailing junk and non-finite values.
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Axis-aligned rectangle in unit screen coordinates.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  Point center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
};

/// Seeded generator with distribution helpers whose output is fixed across
/// standard library implementations (std:: distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n); n must be > 0.
  std::size_t index(std::size_t n);
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sarvr
