#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/activity.hpp"
#include "sarvr/common.hpp"

namespace sarvr::painting {

struct Segment {
  int id = 0;
  int number = 0;
  std::string target_color;
  /// Desk-scale hitbox in unit screen coordinates.
  Rect area;
};

/// Paint-by-numbers canvas: numbers are owned by one side each, and each
/// side's single-column palette holds exactly the colors its segments need.
struct CanvasSpec {
  std::vector<Segment> segments;
  std::map<int, Side> assignment;
  std::map<Side, std::vector<std::string>> palettes;

  /// Throws InvalidCanvas.
  void validate() const;
  const Segment* find(int segment_id) const;
  Side owner(const Segment& s) const { return assignment.at(s.number); }
  std::optional<int> segment_at(Point p) const;
  /// Palette slot hitbox; palettes are one column at the screen edge of each side.
  Rect palette_slot(Side side, std::size_t index) const;
  std::optional<std::string> palette_color_at(Side side, Point p) const;

  /// 4/6/10/16 segments for levels 1..4 with numbers interleaved between sides.
  static CanvasSpec for_level(int level);
  static CanvasSpec from_json(const nlohmann::json& j);
  static CanvasSpec load(const std::string& path);
  nlohmann::json to_json() const;
};

enum class Rejection : std::uint8_t { NotInPalette, NoColorSelected, WrongColor, PartnerSegment, AlreadyFilled };

std::string_view to_string(Rejection r);

struct PaintingState {
  std::map<int, std::string> filled;
  std::array<std::optional<std::string>, 2> selected;
  std::array<Point, 2> brush{{{0.3, 0.5}, {0.7, 0.5}}};
  std::array<Millis, 2> last_progress_at{};
  bool celebrated = false;

  const std::optional<std::string>& selected_color(Side s) const { return selected[s == Side::Left ? 0 : 1]; }
};

struct Result {
  std::optional<Rejection> rejection;
  StepOutput output;

  bool accepted() const { return !rejection; }
};

Result select_color(PaintingState& state, const CanvasSpec& spec, Side side, const std::string& color, Millis now);
/// Throws UnknownSegment.
Result paint(PaintingState& state, const CanvasSpec& spec, Side side, int segment_id, Millis now);

struct Progress {
  std::size_t filled = 0;
  std::size_t total = 0;
  bool complete = false;
};

Progress progress(const PaintingState& state, const CanvasSpec& spec);

struct SelectColor {
  Side side = Side::Left;
  std::string color;
  Millis t = 0;
};
struct Paint {
  Side side = Side::Left;
  int segment_id = 0;
  Millis t = 0;
};
struct Move {
  Side side = Side::Left;
  Point xy;
  Millis t = 0;
};
/// Button press: picks the palette slot or paints the segment under the brush.
struct Grab {
  Side side = Side::Left;
  Millis t = 0;
};
struct Tick {
  Millis t = 0;
};
using PaintingEvent = std::variant<SelectColor, Paint, Move, Grab, Tick>;

class PaintingActivity {
 public:
  PaintingActivity(int level, CanvasSpec spec, Millis idle_window = 20'000);

  StepOutput start(Millis now);
  Result step(const PaintingEvent& event);

  const PaintingState& state() const { return state_; }
  const CanvasSpec& canvas() const { return spec_; }
  bool complete() const { return progress(state_, spec_).complete; }
  nlohmann::json summary() const;

 private:
  int level_;
  CanvasSpec spec_;
  Millis idle_window_;
  PaintingState state_;
  Millis last_t_ = 0;
};

}  // namespace sarvr::painting
