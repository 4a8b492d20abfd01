#include "sarvr/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sarvr::sensors {

const std::array<std::string_view, kJointCount>& joint_names() {
  static constexpr std::array<std::string_view, kJointCount> kNames{
      "pelvis",         "spine navel",    "spine chest", "neck",       "clavicle left", "shoulder left",
      "elbow left",     "wrist left",     "hand left",   "hand tip left", "thumb left", "clavicle right",
      "shoulder right", "elbow right",    "wrist right", "hand right", "hand tip right", "thumb right",
      "hip left",       "knee left",      "ankle left",  "foot left",  "hip right",    "knee right",
      "ankle right",    "foot right",     "head",        "nose",       "eye left",     "ear left",
      "eye right",      "ear right"};
  return kNames;
}

std::optional<std::size_t> joint_index(std::string_view name) {
  std::string lower = to_lower(trim(name));
  std::replace(lower.begin(), lower.end(), '_', ' ');
  const auto& names = joint_names();
  auto it = std::find(names.begin(), names.end(), lower);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

double Body::pelvis_distance() const {
  const auto& p = pelvis();
  return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

namespace {

template <std::size_t N>
std::optional<std::array<double, N>> number_array(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != N) return std::nullopt;
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number()) return std::nullopt;
    out[i] = j[i].get<double>();
    if (!std::isfinite(out[i])) return std::nullopt;
  }
  return out;
}

std::optional<Body> parse_body(const nlohmann::json& j, std::string& why) {
  if (!j.is_object()) {
    why = "body is not an object";
    return std::nullopt;
  }
  auto id = j.find("body_id");
  auto joints = j.find("joints");
  if (id == j.end() || !id->is_number_unsigned() || joints == j.end() || !joints->is_array()) {
    why = "body needs body_id and joints";
    return std::nullopt;
  }
  if (joints->size() != kJointCount) {
    why = "body " + std::to_string(id->get<std::uint64_t>()) + " has " + std::to_string(joints->size()) + " joints";
    return std::nullopt;
  }
  Body body;
  body.body_id = id->get<std::uint32_t>();
  body.joints.resize(kJointCount);
  std::array<bool, kJointCount> seen{};
  for (const auto& jj : *joints) {
    if (!jj.is_object() || !jj.contains("name") || !jj["name"].is_string()) {
      why = "joint without a name";
      return std::nullopt;
    }
    auto idx = joint_index(jj["name"].get<std::string>());
    if (!idx || seen[*idx]) {
      why = "unknown or repeated joint '" + jj["name"].get<std::string>() + "'";
      return std::nullopt;
    }
    auto pos = number_array<3>(jj.value("position", nlohmann::json()));
    auto ori = number_array<4>(jj.value("orientation", nlohmann::json()));
    if (!pos || !ori) {
      why = "joint '" + jj["name"].get<std::string>() + "' has bad position or orientation";
      return std::nullopt;
    }
    seen[*idx] = true;
    body.joints[*idx] = Joint{std::string(joint_names()[*idx]), *pos, *ori};
  }
  return body;
}

}  // namespace

KinectParse parse_kinect_file(std::string_view json_text) {
  auto doc = nlohmann::json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::ParseError, "kinect file is not valid JSON");
  if (!doc.is_object()) throw Error(ErrorCode::NotAnObject, "kinect file must be an object keyed by timestamp");

  KinectParse out;
  for (const auto& [key, value] : doc.items()) {
    auto skip = [&](const std::string& why) {
      ++out.skipped;
      out.warnings.push_back(key + ": " + why);
    };
    auto t = parse_int(key);
    if (!t) {
      skip("key is not an integer timestamp");
      continue;
    }
    const nlohmann::json* bodies = nullptr;
    if (value.is_array()) {
      bodies = &value;
    } else if (value.is_object() && value.contains("bodies") && value["bodies"].is_array()) {
      bodies = &value["bodies"];
    }
    if (!bodies) {
      skip("entry has no bodies array");
      continue;
    }
    KinectFrame frame{*t, {}};
    std::string why;
    bool ok = true;
    for (const auto& b : *bodies) {
      auto body = parse_body(b, why);
      if (!body) {
        ok = false;
        break;
      }
      frame.bodies.push_back(std::move(*body));
    }
    if (!ok) {
      skip(why);
      continue;
    }
    out.frames.push_back(std::move(frame));
  }
  std::stable_sort(out.frames.begin(), out.frames.end(),
                   [](const KinectFrame& a, const KinectFrame& b) { return a.t < b.t; });
  return out;
}

nlohmann::json frame_entry_json(const KinectFrame& frame) {
  nlohmann::json bodies = nlohmann::json::array();
  for (const auto& b : frame.bodies) {
    nlohmann::json joints = nlohmann::json::array();
    for (const auto& j : b.joints) {
      joints.push_back({{"name", j.name}, {"position", j.position}, {"orientation", j.orientation}});
    }
    bodies.push_back({{"body_id", b.body_id}, {"joints", std::move(joints)}});
  }
  return {{"bodies", std::move(bodies)}};
}

std::string to_kinect_json(const std::vector<KinectFrame>& frames) {
  // Keys are written in time order; nlohmann's object type would sort them as strings.
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i) os << ',';
    os << '"' << frames[i].t << "\":" << frame_entry_json(frames[i]).dump();
  }
  os << '}';
  return os.str();
}

Body synthetic_body(std::uint32_t body_id, std::array<double, 3> pelvis) {
  // Rough standing pose, offsets from the pelvis in meters (y up).
  static constexpr std::array<std::array<double, 3>, kJointCount> kOffsets{{
      {0.0, 0.0, 0.0},    {0.0, 0.2, 0.0},    {0.0, 0.35, 0.0},  {0.0, 0.55, 0.0},  {-0.05, 0.5, 0.0},
      {-0.18, 0.5, 0.0},  {-0.22, 0.25, 0.0}, {-0.24, 0.02, 0.0}, {-0.24, -0.05, 0.0}, {-0.24, -0.12, 0.0},
      {-0.2, -0.05, 0.0}, {0.05, 0.5, 0.0},   {0.18, 0.5, 0.0},  {0.22, 0.25, 0.0}, {0.24, 0.02, 0.0},
      {0.24, -0.05, 0.0}, {0.24, -0.12, 0.0}, {0.2, -0.05, 0.0}, {-0.1, -0.05, 0.0}, {-0.1, -0.5, 0.0},
      {-0.1, -0.9, 0.0},  {-0.1, -0.95, 0.1}, {0.1, -0.05, 0.0}, {0.1, -0.5, 0.0},  {0.1, -0.9, 0.0},
      {0.1, -0.95, 0.1},  {0.0, 0.7, 0.0},    {0.0, 0.68, 0.08}, {-0.03, 0.72, 0.07}, {-0.07, 0.7, 0.0},
      {0.03, 0.72, 0.07}, {0.07, 0.7, 0.0},
  }};
  Body b;
  b.body_id = body_id;
  b.joints.reserve(kJointCount);
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const auto& o = kOffsets[i];
    b.joints.push_back(Joint{std::string(joint_names()[i]),
                             {pelvis[0] + o[0], pelvis[1] + o[1], pelvis[2] + o[2]},
                             {1.0, 0.0, 0.0, 0.0}});
  }
  return b;
}

FilterResult filter_bodies(const KinectFrame& frame, double max_range_m, std::size_t max_people) {
  KinectFrame out{frame.t, {}};
  for (const auto& b : frame.bodies) {
    if (b.pelvis_distance() <= max_range_m) out.bodies.push_back(b);
  }
  if (out.bodies.size() > max_people) return Suppressed{out.bodies.size()};
  return out;
}

const LabeledBody* LabeledFrame::find(Side s) const {
  for (const auto& b : bodies) {
    if (b.side == s) return &b;
  }
  return nullptr;
}

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

void SideLabeler::reset() {
  left_.reset();
  right_.reset();
}

LabeledFrame SideLabeler::label(const KinectFrame& frame) {
  const Millis t = frame.t;
  if (!fresh(left_, t)) left_.reset();
  if (!fresh(right_, t)) right_.reset();

  LabeledFrame out{t, {}};
  const auto& bodies = frame.bodies;

  if (bodies.size() == 1) {
    const auto& b = bodies[0];
    Side side;
    if (left_ && right_) {
      side = dist(b.pelvis(), left_->pelvis) <= dist(b.pelvis(), right_->pelvis) ? Side::Left : Side::Right;
    } else if (left_ || right_) {
      const Side known = left_ ? Side::Left : Side::Right;
      const auto& tr = *track(known);
      // Same person if it is the closest thing to the remembered track.
      const bool same = tr.body_id == b.body_id || dist(b.pelvis(), tr.pelvis) < 0.5;
      side = same ? known : other(known);
    } else {
      side = b.pelvis()[0] <= 0.0 ? Side::Left : Side::Right;
    }
    out.bodies.push_back({side, b});
  } else if (bodies.size() >= 2) {
    const Body& a = bodies[0];
    const Body& b = bodies[1];
    bool a_left;
    if (left_ && right_) {
      const double keep = dist(a.pelvis(), left_->pelvis) + dist(b.pelvis(), right_->pelvis);
      const double swap = dist(a.pelvis(), right_->pelvis) + dist(b.pelvis(), left_->pelvis);
      a_left = keep < swap || (keep == swap && a.pelvis()[0] <= b.pelvis()[0]);
    } else if (left_ || right_) {
      const Side known = left_ ? Side::Left : Side::Right;
      const auto& tr = *track(known);
      const bool a_is_known = dist(a.pelvis(), tr.pelvis) <= dist(b.pelvis(), tr.pelvis);
      a_left = (known == Side::Left) == a_is_known;
    } else if (a.pelvis()[0] != b.pelvis()[0]) {
      a_left = a.pelvis()[0] < b.pelvis()[0];
    } else {
      a_left = a.body_id <= b.body_id;
    }
    out.bodies.push_back({a_left ? Side::Left : Side::Right, a});
    out.bodies.push_back({a_left ? Side::Right : Side::Left, b});
  }

  for (const auto& lb : out.bodies) track(lb.side) = Track{lb.body.pelvis(), t, lb.body.body_id};
  return out;
}

// --- wearable physiology -----------------------------------------------------------

std::string_view to_string(E4Channel c) {
  switch (c) {
    case E4Channel::BVP: return "BVP";
    case E4Channel::EDA: return "EDA";
    case E4Channel::TEMP: return "TEMP";
    case E4Channel::ACC: return "ACC";
    case E4Channel::HR: return "HR";
  }
  return "EDA";
}

std::optional<E4Channel> e4_channel_from_string(std::string_view s) {
  for (auto c : kE4Channels) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

double nominal_rate(E4Channel c) {
  switch (c) {
    case E4Channel::BVP: return 64.0;
    case E4Channel::EDA: return 4.0;
    case E4Channel::TEMP: return 4.0;
    case E4Channel::ACC: return 32.0;
    case E4Channel::HR: return 1.0;
  }
  return 1.0;
}

std::size_t columns(E4Channel c) { return c == E4Channel::ACC ? 3 : 1; }

namespace {

// Header rows carry one value, or one per column that must all agree.
std::optional<double> header_value(std::string_view line) {
  std::optional<double> value;
  for (auto field : split(line, ',')) {
    auto v = parse_double(field);
    if (!v || (value && *v != *value)) return std::nullopt;
    value = v;
  }
  return value;
}

}  // namespace

E4Series parse_e4_csv(std::string_view text, E4Channel channel) {
  auto lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 2) throw Error(ErrorCode::BadHeader, std::string(to_string(channel)) + ": missing header rows");

  E4Series s;
  s.channel = channel;
  auto start = header_value(lines[0]);
  auto rate = header_value(lines[1]);
  if (!start) throw Error(ErrorCode::BadHeader, std::string(to_string(channel)) + ": bad start epoch");
  if (!rate || *rate != nominal_rate(channel)) {
    throw Error(ErrorCode::BadHeader, std::string(to_string(channel)) + ": sample rate must be " +
                                          std::to_string(static_cast<int>(nominal_rate(channel))));
  }
  s.start_epoch = *start;
  s.sample_rate = *rate;

  const std::size_t width = columns(channel);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::string row = "row " + std::to_string(i + 1);
    auto fields = split(trim(lines[i]), ',');
    if (fields.size() != width) throw Error(ErrorCode::NonNumericSample, row);
    std::vector<double> sample;
    sample.reserve(width);
    for (auto f : fields) {
      auto v = parse_double(f);
      if (!v) throw Error(ErrorCode::NonNumericSample, row);
      sample.push_back(*v);
    }
    s.samples.push_back(std::move(sample));
  }
  return s;
}

std::string to_csv(const E4Series& series) {
  std::ostringstream os;
  os.precision(17);
  const std::size_t width = columns(series.channel);
  auto header = [&](double v) {
    for (std::size_t c = 0; c < width; ++c) os << (c ? ", " : "") << v;
    os << '\n';
  };
  header(series.start_epoch);
  header(series.sample_rate);
  os.precision(10);
  for (const auto& row : series.samples) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
  return os.str();
}

}  // namespace sarvr::sensors
