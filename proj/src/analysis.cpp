#include "sarvr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace sarvr::analysis {

int score_aes(std::span<const int> items) {
  if (items.size() != kAesItems) {
    throw Error(ErrorCode::BadItemCount, "expected 18 items, got " + std::to_string(items.size()));
  }
  int total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 1 || items[i] > 4) {
      throw Error(ErrorCode::OutOfRange, "item " + std::to_string(i + 1) + " = " + std::to_string(items[i]));
    }
    total += items[i];
  }
  return total;
}

std::string_view to_string(Cognition c) {
  switch (c) {
    case Cognition::Normal: return "Normal";
    case Cognition::MCI: return "MCI";
    case Cognition::Dementia: return "Dementia";
  }
  return "Normal";
}

Cognition classify_sage(int score) {
  if (score < 0 || score > 22) throw Error(ErrorCode::OutOfRange, "SAGE score " + std::to_string(score));
  if (score >= 17) return Cognition::Normal;
  if (score >= 15) return Cognition::MCI;
  return Cognition::Dementia;
}

// --- ratings -----------------------------------------------------------------------

std::string_view to_string(RatingCategory c) {
  switch (c) {
    case RatingCategory::WandComfort: return "wand_comfort";
    case RatingCategory::WandConfidence: return "wand_confidence";
    case RatingCategory::RobotComfort: return "robot_comfort";
    case RatingCategory::RobotConfidence: return "robot_confidence";
    case RatingCategory::ScreenComfort: return "screen_comfort";
    case RatingCategory::ScreenConfidence: return "screen_confidence";
  }
  return "wand_comfort";
}

void RatingSheet::validate() const {
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (items[i] < 1 || items[i] > 5) {
      throw Error(ErrorCode::OutOfRange, participant_id + " " + std::string(to_string(kCategories[i])) + " = " +
                                             std::to_string(items[i]));
    }
  }
}

namespace {

std::map<std::string, const RatingSheet*> index_by_participant(const std::vector<RatingSheet>& sheets) {
  std::map<std::string, const RatingSheet*> out;
  for (const auto& s : sheets) {
    s.validate();
    if (!out.emplace(s.participant_id, &s).second) {
      throw Error(ErrorCode::UnmatchedParticipant, s.participant_id + " appears twice");
    }
  }
  return out;
}

std::vector<std::pair<const RatingSheet*, const RatingSheet*>> match(const std::vector<RatingSheet>& first,
                                                                     const std::vector<RatingSheet>& final) {
  auto a = index_by_participant(first);
  auto b = index_by_participant(final);
  std::vector<std::pair<const RatingSheet*, const RatingSheet*>> out;
  for (const auto& [id, sheet] : a) {
    auto it = b.find(id);
    if (it == b.end()) throw Error(ErrorCode::UnmatchedParticipant, id + " has no final sheet");
    out.emplace_back(sheet, it->second);
  }
  for (const auto& [id, sheet] : b) {
    if (!a.count(id)) throw Error(ErrorCode::UnmatchedParticipant, id + " has no first sheet");
  }
  if (out.empty()) throw Error(ErrorCode::UnmatchedParticipant, "no participants");
  return out;
}

}  // namespace

Improvements rating_improvements(const std::vector<RatingSheet>& first, const std::vector<RatingSheet>& final) {
  const auto pairs = match(first, final);
  Improvements imp;
  imp.participants = pairs.size();
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    double sum = 0.0;
    for (const auto& [a, b] : pairs) sum += b->items[c] - a->items[c];
    imp.category_delta[c] = sum / static_cast<double>(pairs.size());
  }
  imp.overall = std::accumulate(imp.category_delta.begin(), imp.category_delta.end(), 0.0) / kCategoryCount;
  return imp;
}

std::vector<RatingSheet> parse_ratings_csv(std::string_view text) {
  std::vector<RatingSheet> out;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ',');
    if (fields.size() != 2 + kCategoryCount) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 8 fields");
    }
    auto index = parse_int(fields[1]);
    if (!index) {
      if (out.empty() && trim(fields[0]) == "participant_id") continue;
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad session_index");
    }
    RatingSheet s;
    s.participant_id = std::string(trim(fields[0]));
    s.session_index = static_cast<int>(*index);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      auto v = parse_int(fields[2 + c]);
      if (!v) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad rating");
      s.items[c] = static_cast<int>(*v);
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<RatingSheet>, std::vector<RatingSheet>> first_and_final(const std::vector<RatingSheet>& sheets) {
  std::map<std::string, std::pair<const RatingSheet*, const RatingSheet*>> range;
  for (const auto& s : sheets) {
    auto [it, inserted] = range.try_emplace(s.participant_id, &s, &s);
    if (inserted) continue;
    if (s.session_index < it->second.first->session_index) it->second.first = &s;
    if (s.session_index > it->second.second->session_index) it->second.second = &s;
  }
  std::pair<std::vector<RatingSheet>, std::vector<RatingSheet>> out;
  for (const auto& [id, r] : range) {
    if (r.first == r.second) throw Error(ErrorCode::UnmatchedParticipant, id + " has a single session");
    out.first.push_back(*r.first);
    out.second.push_back(*r.second);
  }
  return out;
}

// --- Wilcoxon ----------------------------------------------------------------------

std::string_view to_string(Method m) { return m == Method::Exact ? "exact" : "normal"; }

std::vector<double> signed_ranks(std::span<const double> nonzero) {
  const std::size_t n = nonzero.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(nonzero[a]) < std::abs(nonzero[b]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(nonzero[order[j + 1]]) == std::abs(nonzero[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_differences(std::span<const double> differences) {
  std::vector<double> d;
  for (double x : differences) {
    if (x != 0.0) d.push_back(x);
  }
  if (d.empty()) throw Error(ErrorCode::AllZeroDifferences, std::to_string(differences.size()) + " pairs");

  const auto ranks = signed_ranks(d);
  WilcoxonResult r;
  r.n_effective = d.size();
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];

  const std::size_t n = d.size();
  if (n <= kExactLimit) {
    r.method = Method::Exact;
    // Doubled ranks are integers even with half-integer averages.
    std::vector<int> doubled(n);
    int max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      max_sum += doubled[i];
    }
    std::vector<double> count(static_cast<std::size_t>(max_sum) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int rk : doubled) {
      for (int s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
      reach += rk;
    }
    const int w2 = static_cast<int>(std::lround(2.0 * r.w_plus));
    double le = 0.0;
    double ge = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
      if (s <= w2) le += count[static_cast<std::size_t>(s)];
      if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));
    r.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / total);
  } else {
    r.method = Method::Normal;
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    std::map<double, std::size_t> groups;
    for (double rk : ranks) ++groups[rk];
    for (const auto& [rk, t] : groups) {
      const double tt = static_cast<double>(t);
      tie_term += tt * tt * tt - tt;
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::abs(r.w_plus - mean) - 0.5);
    r.z = var > 0 ? std::copysign(dev / std::sqrt(var), r.w_plus - mean) : 0.0;
    r.p_two_sided = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  }
  return r;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs) {
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto& [a, b] : pairs) d.push_back(b - a);
  return wilcoxon_differences(d);
}

std::vector<std::pair<double, double>> pool(const std::vector<RatingSheet>& first,
                                            const std::vector<RatingSheet>& final, Pooling mode) {
  const auto pairs = match(first, final);
  std::vector<std::pair<double, double>> out;
  if (mode == Pooling::Pairs) {
    for (const auto& [a, b] : pairs) {
      for (std::size_t c = 0; c < kCategoryCount; ++c) out.emplace_back(a->items[c], b->items[c]);
    }
    return out;
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    double sa = 0.0;
    double sb = 0.0;
    for (const auto& [a, b] : pairs) {
      sa += a->items[c];
      sb += b->items[c];
    }
    const double n = static_cast<double>(pairs.size());
    out.emplace_back(sa / n, sb / n);
  }
  return out;
}

// --- event rates -------------------------------------------------------------------

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::ParticipantInteraction: return "ParticipantInteraction";
    case EventKind::RobotIntervention: return "RobotIntervention";
    case EventKind::ResearcherIntervention: return "ResearcherIntervention";
  }
  return "ParticipantInteraction";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : kEventKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

EventRates event_rates(const CodedEventLog& log) {
  if (!(log.duration_min > 0.0)) throw Error(ErrorCode::ZeroDuration, std::to_string(log.duration_min) + " min");
  EventRates r;
  r.duration_min = log.duration_min;
  for (const auto& e : log.events) {
    if (e.t_min < 0.0 || e.t_min > log.duration_min) {
      throw Error(ErrorCode::OutOfRange, "event at " + std::to_string(e.t_min) + " min");
    }
    ++r.counts[static_cast<std::size_t>(e.kind)];
  }
  for (std::size_t k = 0; k < r.counts.size(); ++k) {
    r.per_minute[k] = static_cast<double>(r.counts[k]) / log.duration_min;
  }
  return r;
}

CodedEventLog parse_event_log(std::string_view text, std::optional<double> duration_min) {
  CodedEventLog log;
  std::optional<double> declared;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      constexpr std::string_view kKey = "duration_min=";
      if (body.rfind(kKey, 0) == 0) {
        declared = parse_double(body.substr(kKey.size()));
        if (!declared) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad duration");
      }
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected t_min,kind");
    auto t = parse_double(fields[0]);
    auto kind = event_kind_from_string(trim(fields[1]));
    if (!t || !kind) {
      if (log.events.empty() && trim(fields[0]) == "t_min") continue;
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad event");
    }
    log.events.push_back({*t, *kind});
  }
  if (duration_min) {
    log.duration_min = *duration_min;
  } else if (declared) {
    log.duration_min = *declared;
  } else {
    throw Error(ErrorCode::ParseError, "no duration_min given");
  }
  return log;
}

// --- reports -----------------------------------------------------------------------

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

std::string improvements_csv(const Improvements& imp) {
  std::string out = "category,mean_delta\n";
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    out += std::string(to_string(kCategories[c])) + "," + fmt("%.6f", imp.category_delta[c]) + "\n";
  }
  out += "overall," + fmt("%.6f", imp.overall) + "\n";
  return out;
}

std::string improvements_table(const Improvements& imp) {
  std::string out = "Rating change, first to final session (n = " + std::to_string(imp.participants) + ")\n";
  out += "  category            mean delta\n";
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    char row[96];
    std::snprintf(row, sizeof(row), "  %-18s  %+10.3f\n", std::string(to_string(kCategories[c])).c_str(),
                  imp.category_delta[c]);
    out += row;
  }
  char row[96];
  std::snprintf(row, sizeof(row), "  %-18s  %+10.3f\n", "overall", imp.overall);
  out += row;
  return out;
}

std::string wilcoxon_table(const WilcoxonResult& w) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "Wilcoxon signed-rank: W+ = %.1f, W- = %.1f, n = %zu, p = %.6g (%s)\n", w.w_plus,
                w.w_minus, w.n_effective, w.p_two_sided, std::string(to_string(w.method)).c_str());
  return buf;
}

std::string rates_csv(const EventRates& r) {
  std::string out = "kind,count,per_minute\n";
  for (auto k : kEventKinds) {
    const auto i = static_cast<std::size_t>(k);
    out += std::string(to_string(k)) + "," + std::to_string(r.counts[i]) + "," + fmt("%.6f", r.per_minute[i]) + "\n";
  }
  return out;
}

std::string rates_table(const EventRates& r) {
  std::string out = "Events per minute over " + fmt("%.2f", r.duration_min) + " min\n";
  for (auto k : kEventKinds) {
    const auto i = static_cast<std::size_t>(k);
    char row[128];
    std::snprintf(row, sizeof(row), "  %-24s %6zu  %8.3f/min\n", std::string(to_string(k)).c_str(), r.counts[i],
                  r.per_minute[i]);
    out += row;
  }
  return out;
}

}  // namespace sarvr::analysis
