#include "sarvr/common.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace sarvr {

std::string_view to_string(Side s) { return s == Side::Left ? "Left" : "Right"; }

std::string_view to_string(Target t) {
  switch (t) {
    case Target::Left: return "Left";
    case Target::Right: return "Right";
    case Target::Both: return "Both";
  }
  return "Both";
}

std::string_view to_string(WandColor c) { return c == WandColor::Red ? "Red" : "Blue"; }

std::optional<Side> side_from_string(std::string_view s) {
  if (s == "Left" || s == "left") return Side::Left;
  if (s == "Right" || s == "right") return Side::Right;
  return std::nullopt;
}

std::optional<Target> target_from_string(std::string_view s) {
  if (auto side = side_from_string(s)) return target_of(*side);
  if (s == "Both" || s == "both") return Target::Both;
  return std::nullopt;
}

std::optional<WandColor> wand_color_from_string(std::string_view s) {
  if (s == "Red" || s == "red") return WandColor::Red;
  if (s == "Blue" || s == "blue") return WandColor::Blue;
  return std::nullopt;
}

std::string_view to_string(ErrorCode code) {
  static constexpr std::array<std::string_view, 42> names = {
      "InvalidConfig",     "IllegalTransition",  "ClockRegression",   "ActivityNotRunning",
      "InvalidChart",      "NoteAlreadyJudged",  "EventOutOfOrder",   "WrongRole",
      "UnknownSegment",    "InvalidCanvas",      "UnknownWord",       "UnknownLetterId",
      "RoundIncomplete",   "UnknownCode",        "UnsupportedAdapter", "InvalidVocabulary",
      "ConnectFailed",     "AuthFailed",         "Disconnected",      "AdapterMismatch",
      "BadMagic",          "BadCrc",             "UnknownKind",       "ShortFrame",
      "BadField",          "NonUnitQuaternion",  "NotAnObject",       "BadHeader",
      "NonNumericSample",  "IoFailure",          "UnsortedSource",    "MissingStream",
      "UploadFailed",      "ChecksumMismatch",   "BadItemCount",      "OutOfRange",
      "UnmatchedParticipant", "AllZeroDifferences", "ZeroDuration",   "BadAddress",
      "NotFound",          "ParseError",
  };
  auto i = static_cast<std::size_t>(code);
  return i < names.size() ? names[i] : "Unknown";
}

namespace {
std::string format_error(ErrorCode code, const std::string& detail) {
  std::string out(to_string(code));
  if (!detail.empty()) {
    out += ": ";
    out += detail;
  }
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(format_error(code, detail)), code_(code), detail_(detail) {}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = next();
  while (v >= limit) v = next();
  return static_cast<std::size_t>(v % bound);
}

}  // namespace sarvr
