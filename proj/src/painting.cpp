#include "sarvr/painting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace sarvr::painting {

namespace {

constexpr std::array<std::string_view, 8> kColors = {"red",    "blue",   "yellow", "green",
                                                     "orange", "purple", "brown",  "pink"};

std::size_t si(Side s) { return s == Side::Left ? 0 : 1; }

}  // namespace

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::NotInPalette: return "NotInPalette";
    case Rejection::NoColorSelected: return "NoColorSelected";
    case Rejection::WrongColor: return "WrongColor";
    case Rejection::PartnerSegment: return "PartnerSegment";
    case Rejection::AlreadyFilled: return "AlreadyFilled";
  }
  return "WrongColor";
}

void CanvasSpec::validate() const {
  if (segments.empty()) throw Error(ErrorCode::InvalidCanvas, "canvas has no segments");
  std::set<int> ids;
  std::map<Side, std::set<std::string>> needed;
  for (const auto& s : segments) {
    if (!ids.insert(s.id).second) throw Error(ErrorCode::InvalidCanvas, "duplicate segment id " + std::to_string(s.id));
    auto owner = assignment.find(s.number);
    if (owner == assignment.end()) {
      throw Error(ErrorCode::InvalidCanvas, "number " + std::to_string(s.number) + " is not assigned");
    }
    needed[owner->second].insert(s.target_color);
  }
  for (Side side : {Side::Left, Side::Right}) {
    auto it = palettes.find(side);
    std::vector<std::string> palette = it == palettes.end() ? std::vector<std::string>{} : it->second;
    std::set<std::string> have(palette.begin(), palette.end());
    if (have.size() != palette.size()) throw Error(ErrorCode::InvalidCanvas, "duplicate palette color");
    if (have != needed[side]) {
      throw Error(ErrorCode::InvalidCanvas,
                  std::string(to_string(side)) + " palette must hold exactly the colors of its segments");
    }
  }
}

const Segment* CanvasSpec::find(int segment_id) const {
  auto it = std::find_if(segments.begin(), segments.end(), [&](const Segment& s) { return s.id == segment_id; });
  return it == segments.end() ? nullptr : &*it;
}

std::optional<int> CanvasSpec::segment_at(Point p) const {
  for (const auto& s : segments) {
    if (s.area.contains(p)) return s.id;
  }
  return std::nullopt;
}

Rect CanvasSpec::palette_slot(Side side, std::size_t index) const {
  const double x0 = side == Side::Left ? 0.02 : 0.90;
  const double h = 0.08;
  const double y0 = 0.1 + static_cast<double>(index) * (h + 0.02);
  return {x0, y0, x0 + 0.08, y0 + h};
}

std::optional<std::string> CanvasSpec::palette_color_at(Side side, Point p) const {
  auto it = palettes.find(side);
  if (it == palettes.end()) return std::nullopt;
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    if (palette_slot(side, i).contains(p)) return it->second[i];
  }
  return std::nullopt;
}

CanvasSpec CanvasSpec::for_level(int level) {
  int count = 0;
  int numbers = 0;
  switch (level) {
    case 1: count = 4, numbers = 2; break;
    case 2: count = 6, numbers = 4; break;
    case 3: count = 10, numbers = 6; break;
    case 4: count = 16, numbers = 8; break;
    default: throw Error(ErrorCode::InvalidConfig, "painting level out of range");
  }
  CanvasSpec spec;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  const int rows = (count + cols - 1) / cols;
  const double w = 0.7 / cols;
  const double h = 0.8 / rows;
  for (int i = 0; i < count; ++i) {
    const int number = i % numbers + 1;
    const int r = i / cols;
    const int c = i % cols;
    Rect area{0.15 + c * w, 0.1 + r * h, 0.15 + (c + 1) * w - 0.005, 0.1 + (r + 1) * h - 0.005};
    spec.segments.push_back({i + 1, number, std::string(kColors[static_cast<std::size_t>(number - 1)]), area});
  }
  for (int n = 1; n <= numbers; ++n) {
    const Side side = n % 2 == 1 ? Side::Left : Side::Right;
    spec.assignment[n] = side;
    spec.palettes[side].push_back(std::string(kColors[static_cast<std::size_t>(n - 1)]));
  }
  spec.validate();
  return spec;
}

CanvasSpec CanvasSpec::from_json(const nlohmann::json& j) {
  CanvasSpec spec;
  try {
    for (const auto& s : j.at("segments")) {
      const auto& a = s.at("area");
      spec.segments.push_back({s.at("id").get<int>(), s.at("number").get<int>(), s.at("color").get<std::string>(),
                               Rect{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
                                    a.at(3).get<double>()}});
    }
    for (const auto& [number, side_name] : j.at("assignment").items()) {
      auto side = side_from_string(side_name.get<std::string>());
      if (!side) throw Error(ErrorCode::InvalidCanvas, "bad side for number " + number);
      spec.assignment[std::stoi(number)] = *side;
    }
    for (const auto& [side_name, colors] : j.at("palettes").items()) {
      auto side = side_from_string(side_name);
      if (!side) throw Error(ErrorCode::InvalidCanvas, "bad palette side " + side_name);
      spec.palettes[*side] = colors.get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidCanvas, ex.what());
  } catch (const std::logic_error& ex) {
    throw Error(ErrorCode::InvalidCanvas, ex.what());
  }
  spec.validate();
  return spec;
}

CanvasSpec CanvasSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open canvas " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorCode::InvalidCanvas, ex.what());
  }
}

nlohmann::json CanvasSpec::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : segments) {
    segs.push_back({{"id", s.id},
                    {"number", s.number},
                    {"color", s.target_color},
                    {"area", {s.area.x0, s.area.y0, s.area.x1, s.area.y1}}});
  }
  nlohmann::json assign = nlohmann::json::object();
  for (const auto& [n, side] : assignment) assign[std::to_string(n)] = to_string(side);
  nlohmann::json pal = nlohmann::json::object();
  for (const auto& [side, colors] : palettes) pal[std::string(to_string(side))] = colors;
  return {{"segments", std::move(segs)}, {"assignment", std::move(assign)}, {"palettes", std::move(pal)}};
}

Result select_color(PaintingState& state, const CanvasSpec& spec, Side side, const std::string& color, Millis now) {
  Result r;
  auto it = spec.palettes.find(side);
  if (it == spec.palettes.end() || std::find(it->second.begin(), it->second.end(), color) == it->second.end()) {
    r.rejection = Rejection::NotInPalette;
    return r;
  }
  auto& slot = state.selected[si(side)];
  if (slot == color) return r;
  slot = color;
  r.output.effect("brush_tip_color", {{"side", to_string(side)}, {"color", color}, {"t", now}});
  return r;
}

Result paint(PaintingState& state, const CanvasSpec& spec, Side side, int segment_id, Millis now) {
  const Segment* seg = spec.find(segment_id);
  if (seg == nullptr) throw Error(ErrorCode::UnknownSegment, std::to_string(segment_id));

  Result r;
  const Side owner = spec.owner(*seg);
  if (state.filled.count(segment_id) != 0) {
    r.rejection = Rejection::AlreadyFilled;
  } else if (owner != side) {
    r.rejection = Rejection::PartnerSegment;
    r.output.emit(FeedbackCategory::Corrective, side_code(side, "PartnerSegment"), target_of(side), now);
  } else if (!state.selected_color(side)) {
    r.rejection = Rejection::NoColorSelected;
  } else if (*state.selected_color(side) != seg->target_color) {
    r.rejection = Rejection::WrongColor;
    r.output.emit(FeedbackCategory::Corrective, side_code(side, "WrongColor"), target_of(side), now);
  }
  if (r.rejection) {
    r.output.effect("paint_rejected",
                    {{"side", to_string(side)}, {"segment", segment_id}, {"reason", to_string(*r.rejection)}});
    return r;
  }

  state.filled[segment_id] = seg->target_color;
  state.last_progress_at[si(side)] = now;
  r.output.score_delta = 1;
  r.output.effect("segment_filled", {{"side", to_string(side)}, {"segment", segment_id}, {"color", seg->target_color}});
  if (progress(state, spec).complete && !state.celebrated) {
    state.celebrated = true;
    r.output.emit(FeedbackCategory::Celebration, "PaintingComplete", Target::Both, now);
    r.output.effect("activity_complete", {{"filled", state.filled.size()}});
  }
  return r;
}

Progress progress(const PaintingState& state, const CanvasSpec& spec) {
  Progress p;
  p.total = spec.segments.size();
  p.filled = state.filled.size();
  p.complete = p.filled == p.total;
  return p;
}

PaintingActivity::PaintingActivity(int level, CanvasSpec spec, Millis idle_window)
    : level_(level), spec_(std::move(spec)), idle_window_(idle_window) {
  if (level < kTutorialLevel || level > kMaxLevel) throw Error(ErrorCode::InvalidConfig, "painting level out of range");
  spec_.validate();
}

StepOutput PaintingActivity::start(Millis now) {
  StepOutput out;
  state_ = PaintingState{};
  state_.last_progress_at = {now, now};
  last_t_ = now;
  if (level_ == kTutorialLevel) out.emit(FeedbackCategory::Instruction, "PaintingTutorial", Target::Both, now);
  out.effect("painting_started", {{"level", level_}, {"segments", spec_.segments.size()}});
  return out;
}

Result PaintingActivity::step(const PaintingEvent& event) {
  return std::visit(
      [this](const auto& e) -> Result {
        using E = std::decay_t<decltype(e)>;
        if (e.t < last_t_) {
          throw Error(ErrorCode::EventOutOfOrder, std::to_string(e.t) + " < " + std::to_string(last_t_));
        }
        last_t_ = e.t;
        if constexpr (std::is_same_v<E, SelectColor>) {
          return select_color(state_, spec_, e.side, e.color, e.t);
        } else if constexpr (std::is_same_v<E, Paint>) {
          return paint(state_, spec_, e.side, e.segment_id, e.t);
        } else if constexpr (std::is_same_v<E, Move>) {
          state_.brush[si(e.side)] = {std::clamp(e.xy.x, 0.0, 1.0), std::clamp(e.xy.y, 0.0, 1.0)};
          return {};
        } else if constexpr (std::is_same_v<E, Grab>) {
          const Point at = state_.brush[si(e.side)];
          if (auto color = spec_.palette_color_at(e.side, at)) return select_color(state_, spec_, e.side, *color, e.t);
          if (auto seg = spec_.segment_at(at)) return paint(state_, spec_, e.side, *seg, e.t);
          return {};
        } else {
          Result r;
          if (complete()) return r;
          for (Side side : {Side::Left, Side::Right}) {
            bool owns_open = std::any_of(spec_.segments.begin(), spec_.segments.end(), [&](const Segment& s) {
              return spec_.owner(s) == side && state_.filled.count(s.id) == 0;
            });
            auto& last = state_.last_progress_at[si(side)];
            if (owns_open && e.t - last > idle_window_) {
              r.output.emit(FeedbackCategory::Corrective, side_code(side, "PaintReminder"), target_of(side), e.t);
              last = e.t;
            }
          }
          return r;
        }
      },
      event);
}

nlohmann::json PaintingActivity::summary() const {
  auto p = progress(state_, spec_);
  nlohmann::json selected = nlohmann::json::object();
  for (Side side : {Side::Left, Side::Right}) {
    const auto& c = state_.selected_color(side);
    selected[std::string(to_string(side))] = c ? nlohmann::json(*c) : nlohmann::json(nullptr);
  }
  nlohmann::json filled = nlohmann::json::object();
  for (const auto& [id, color] : state_.filled) filled[std::to_string(id)] = color;
  return {{"level", level_},
          {"filled", p.filled},
          {"total", p.total},
          {"complete", p.complete},
          {"selected", std::move(selected)},
          {"fills", std::move(filled)}};
}

}  // namespace sarvr::painting
