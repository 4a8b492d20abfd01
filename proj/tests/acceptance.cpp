// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "sarvr/analysis.hpp"
#include "sarvr/sensors.hpp"
#include "sarvr/wand.hpp"
#include "support/http_session.hpp"
#include "support/oracles.hpp"
#include "support/scripts.hpp"

namespace {

using namespace sarvr;
namespace fs = std::filesystem;

struct Verdict {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sarvr_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// --- screening ---------------------------------------------------------------------

Verdict screening() {
  Verdict v;
  std::vector<int> low(18, 1), high(18, 4);
  v.check(analysis::score_aes(low) == 18, "AES all-ones != 18");
  v.check(analysis::score_aes(high) == 72, "AES all-fours != 72");
  v.check(analysis::classify_sage(17) == analysis::Cognition::Normal, "SAGE 17 not Normal");
  v.check(analysis::classify_sage(15) == analysis::Cognition::MCI, "SAGE 15 not MCI");
  v.check(analysis::classify_sage(14) == analysis::Cognition::Dementia, "SAGE 14 not Dementia");
  if (v.ok) v.detail = "AES 18/72, SAGE 17/15/14 -> Normal/MCI/Dementia";
  return v;
}

// --- analytics ---------------------------------------------------------------------

/// Four participants rated 3 everywhere at first; per-category deltas are
/// split into whole-point changes so the category mean equals the target.
std::pair<std::vector<analysis::RatingSheet>, std::vector<analysis::RatingSheet>> site(
    const std::array<double, 6>& target) {
  std::vector<analysis::RatingSheet> first, final;
  for (int p = 0; p < 4; ++p) {
    analysis::RatingSheet a{"P" + std::to_string(p + 1), 1, {3, 3, 3, 3, 3, 3}};
    analysis::RatingSheet b = a;
    b.session_index = 6;
    for (std::size_t c = 0; c < 6; ++c) {
      const int steps = static_cast<int>(std::lround(std::abs(target[c]) * 4));
      if (p < steps) b.items[c] += target[c] > 0 ? 1 : -1;
    }
    first.push_back(a);
    final.push_back(b);
  }
  return {first, final};
}

Verdict analytics() {
  Verdict v;
  auto [f1, l1] = site({1.0, 1.0, 0.75, 0.75, 0.75, -0.75});
  auto [f2, l2] = site({1.0, 1.0, 0.75, 0.75, 0.5, 0.25});
  const double site1 = analysis::rating_improvements(f1, l1).overall;
  const double site2 = analysis::rating_improvements(f2, l2).overall;
  v.check(fmt(site1) == "0.583", "site 1 overall " + fmt(site1, 6));
  v.check(fmt(site2) == "0.708", "site 2 overall " + fmt(site2, 6));

  Rng rng(2024);
  int cases = 0;
  double worst = 0.0;
  while (cases < 1000) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<double> d(n);
    for (auto& x : d) x = static_cast<double>(static_cast<int>(rng.index(11)) - 5);
    auto ref = oracle::wilcoxon_enumerate(d);
    if (ref.n == 0) continue;
    ++cases;
    auto got = analysis::wilcoxon_differences(d);
    const double err = std::max(std::abs(got.p_two_sided - ref.p_two_sided), std::abs(got.w_plus - ref.w_plus));
    worst = std::max(worst, err);
    v.check(got.n_effective == ref.n, "n_effective mismatch");
    v.check(err <= 1e-9, "Wilcoxon differs from enumeration by " + std::to_string(err));
  }
  if (v.ok) {
    v.detail = "overall " + fmt(site1) + " / " + fmt(site2) + "; 1000 Wilcoxon cases n<=12 max |err| " +
               std::to_string(worst);
  }
  return v;
}

// --- event rates -------------------------------------------------------------------

analysis::CodedEventLog log_of(std::size_t count, analysis::EventKind kind, double duration) {
  analysis::CodedEventLog log{duration, {}};
  for (std::size_t i = 0; i < count; ++i) {
    log.events.push_back({duration * static_cast<double>(i) / static_cast<double>(count), kind});
  }
  return log;
}

Verdict event_rates() {
  Verdict v;
  using analysis::EventKind;
  const double r8 = analysis::event_rates(log_of(8, EventKind::ParticipantInteraction, 50)).rate(EventKind::ParticipantInteraction);
  const double r57 = analysis::event_rates(log_of(57, EventKind::ParticipantInteraction, 50)).rate(EventKind::ParticipantInteraction);
  const double r55 = analysis::event_rates(log_of(55, EventKind::RobotIntervention, 75)).rate(EventKind::RobotIntervention);
  v.check(r8 == 0.16, "8/50 = " + fmt(r8, 12));
  v.check(r57 == 1.14, "57/50 = " + fmt(r57, 12));
  v.check(std::abs(r55 - 55.0 / 75.0) <= 1e-9, "55/75 = " + fmt(r55, 12));
  if (v.ok) v.detail = "0.16, 1.14, " + fmt(r55, 4) + " events/min";
  return v;
}

// --- activity state machines -------------------------------------------------------

/// Every state reachable from a fresh one-fish level under a finite input
/// alphabet. Deposits must come from InNet, InNet from Hooked or
/// TransferPending, and those only after Cast.
Verdict fishing_exploration() {
  Verdict v;
  using fishing::Phase;
  fishing::LevelSpec spec{1, 2, 20'000, false};
  Rng rng(5);
  const auto start = fishing::initial_state(2, spec, rng, 0);

  std::vector<Point> spots{start.fish, start.buckets[0].position, start.buckets[1].position, {0.5, 0.1}};
  std::vector<fishing::FishingEvent> alphabet{fishing::CastGesture{Side::Right, 0}, fishing::Grab{Side::Left, 0},
                                              fishing::Grab{Side::Right, 0}, fishing::Release{Side::Left, 0},
                                              fishing::Release{Side::Right, 0}};
  for (auto p : spots) {
    alphabet.push_back(fishing::Move{Side::Left, p, 0});
    alphabet.push_back(fishing::Move{Side::Right, p, 0});
  }
  // Allowed predecessor sets, stated independently of the implementation.
  const std::map<Phase, std::set<Phase>> allowed_from{
      {Phase::Cast, {Phase::Idle}},
      {Phase::Hooked, {Phase::Cast, Phase::TransferPending}},
      {Phase::TransferPending, {Phase::Hooked}},
      {Phase::InNet, {Phase::Hooked, Phase::TransferPending}},
      {Phase::Deposited, {Phase::InNet}},
      {Phase::Idle, {Phase::Deposited}},
  };

  struct Node {
    fishing::FishingState state;
    Rng rng;
    // Phases visited since the last Idle.
    std::set<Phase> history;
  };
  std::vector<Node> frontier{{start, rng, {}}};
  std::set<std::string> seen;
  std::size_t explored = 0;
  bool deposited = false;
  auto key = [](const Node& n) {
    std::string k = fishing::summary(n.state).dump();
    for (auto p : n.history) k += fishing::to_string(p);
    return k;
  };
  seen.insert(key(frontier[0]));
  while (!frontier.empty()) {
    Node node = frontier.back();
    frontier.pop_back();
    ++explored;
    for (const auto& ev : alphabet) {
      Node next = node;
      StepOutput out;
      try {
        out = fishing::step(next.state, ev, next.rng);
      } catch (const Error&) {
        continue;
      }
      for (const auto& e : out.effects) {
        if (e.name != "fishing_phase") continue;
        auto from = e.payload.at("from").get<std::string>();
        auto to = e.payload.at("to").get<std::string>();
        Phase pf{}, pt{};
        for (auto p : {Phase::Idle, Phase::Cast, Phase::Hooked, Phase::TransferPending, Phase::InNet, Phase::Deposited}) {
          if (fishing::to_string(p) == from) pf = p;
          if (fishing::to_string(p) == to) pt = p;
        }
        v.check(allowed_from.at(pt).count(pf) == 1, "illegal edge " + from + " -> " + to);
        if (pt == Phase::Deposited) {
          deposited = true;
          for (auto need : {Phase::Cast, Phase::Hooked, Phase::InNet}) {
            v.check(next.history.count(need) == 1, "Deposited without " + std::string(fishing::to_string(need)));
          }
        }
        if (pt == Phase::Idle) next.history.clear();
        else next.history.insert(pt);
      }
      if (out.score_delta > 0) v.check(node.state.phase == Phase::InNet, "score outside InNet");
      if (seen.insert(key(next)).second) frontier.push_back(std::move(next));
    }
  }
  v.check(deposited, "Deposited never reached");
  if (v.ok) v.detail = std::to_string(explored) + " states";
  return v;
}

Verdict activity_suites() {
  Verdict v;
  std::vector<std::string> notes;
  for (int level = 2; level <= 4; ++level) {
    auto m = script::play_music(level, 11 + static_cast<std::uint64_t>(level));
    v.check(m.complete, "music level " + std::to_string(level) + " incomplete");
    if (level >= 3) {
      v.check(m.score == 16, "music level " + std::to_string(level) + " score " + std::to_string(m.score));
    }
    auto f = script::play_fishing(level, 21 + static_cast<std::uint64_t>(level));
    v.check(f.complete, "fishing level " + std::to_string(level) + " incomplete (" + f.detail + ")");
    auto p = script::play_painting(level);
    v.check(p.complete, "painting level " + std::to_string(level) + " incomplete (" + p.detail + ")");
    for (Side solo : {Side::Left, Side::Right}) {
      auto alone = script::play_painting(level, solo);
      v.check(!alone.complete, "painting level " + std::to_string(level) + " completed by one side");
    }
    auto s = script::play_spelling(level, 31 + static_cast<std::uint64_t>(level));
    v.check(s.complete, "spelling level " + std::to_string(level) + " incomplete " + s.detail);
    v.check(s.words == s.spelled, "spelling level " + std::to_string(level) + " spelled a different word");
    v.check(s.tricks == s.words, "spelling level " + std::to_string(level) + " tricks differ from words");
  }
  auto explore = fishing_exploration();
  v.check(explore.ok, explore.detail);
  if (v.ok) v.detail = "levels 2-4 complete for all four activities; fishing exploration " + explore.detail;
  return v;
}

// --- music assignment --------------------------------------------------------------

Verdict music_policy() {
  Verdict v;
  const double decay = 0.5;
  music::AssignmentPolicy policy;
  policy.mode = music::AssignmentMode::Probability;
  policy.decay = decay;
  Rng rng(77);
  std::vector<int> runs;
  int run = 0;
  std::optional<Side> last;
  for (int i = 0; i < 100'000; ++i) {
    auto [side, next] = music::next_assignment(policy, rng);
    policy = next;
    if (last && side != *last) {
      runs.push_back(run);
      run = 0;
    }
    last = side;
    ++run;
  }
  const double n = static_cast<double>(runs.size());
  double worst_sigma = 0.0;
  for (int k = 1; k <= 5; ++k) {
    const double p = oracle::run_longer_than(k, decay);
    double count = 0;
    for (int r : runs) count += r > k ? 1 : 0;
    const double sigma = std::sqrt(p * (1 - p) / n);
    const double dev = std::abs(count / n - p) / sigma;
    worst_sigma = std::max(worst_sigma, dev);
    v.check(dev <= 3.0, "run > " + std::to_string(k) + " off by " + fmt(dev, 2) + " sigma");
  }

  music::AssignmentPolicy alt;
  alt.mode = music::AssignmentMode::Alternate;
  Rng rng2(1);
  auto sides = music::assign_all(music::BeatChart::regular("alt", 1000, 500, 2000, 1000), alt, rng2);
  for (std::size_t i = 0; i < sides.size(); ++i) {
    v.check(sides[i] == (i % 2 == 0 ? Side::Left : Side::Right), "alternate broke at note " + std::to_string(i));
  }
  if (v.ok) v.detail = std::to_string(runs.size()) + " runs, worst " + fmt(worst_sigma, 2) + " sigma; alternate periodic";
  return v;
}

// --- feedback rate limiting --------------------------------------------------------

Verdict feedback_storms() {
  Verdict v;
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::seed());
  std::vector<std::string> codes = vocab->codes();
  std::map<FeedbackCategory, std::vector<std::string>> by_category;
  for (const auto& c : codes) by_category[vocab->at(c).category].push_back(c);

  std::size_t dispatched_total = 0;
  std::size_t preemptions = 0;
  for (std::uint64_t storm = 0; storm < 5; ++storm) {
    const Millis min_gap = 10'000, max_age = 30'000;
    FeedbackPolicy policy(vocab, min_gap, max_age);
    Rng rng(900 + storm);
    Millis now = 0;
    std::optional<Millis> last_dispatch;
    std::map<std::string, Millis> last_said;
    // Instruction codes submitted and not yet spoken, by first issue time.
    std::map<std::string, Millis> waiting_instructions;

    auto on_dispatch = [&](const FeedbackEvent& e) {
      ++dispatched_total;
      if (last_dispatch) v.check(now - *last_dispatch >= min_gap, "utterances " + std::to_string(now - *last_dispatch) + " ms apart");
      last_dispatch = now;
      last_said[e.code] = now;
      if (e.category == FeedbackCategory::Encouragement) {
        for (const auto& [code, issued] : waiting_instructions) {
          v.check(now - issued > max_age, "Encouragement spoken while Instruction " + code + " waited");
        }
      }
      if (e.category == FeedbackCategory::Instruction && policy.pending() > 0) ++preemptions;
      waiting_instructions.erase(e.code);
    };

    for (int i = 0; i < 10'000; ++i) {
      now += static_cast<Millis>(rng.index(400));
      const auto cat = static_cast<FeedbackCategory>(rng.index(4));
      const auto& pool = by_category[cat];
      if (pool.empty()) continue;
      auto ev = vocab->make_event(pool[rng.index(pool.size())], now);
      if (cat == FeedbackCategory::Instruction) {
        auto said = last_said.find(ev.code);
        const bool dropped = said != last_said.end() && now - said->second < min_gap;
        if (!dropped) waiting_instructions.try_emplace(ev.code, now);
      }
      if (auto out = policy.submit(ev, now)) on_dispatch(*out);
      if (rng.coin()) {
        if (auto out = policy.poll(now)) on_dispatch(*out);
      }
    }
  }
  if (v.ok) v.detail = "5 storms x 10000 events, " + std::to_string(dispatched_total) + " utterances, " +
                       std::to_string(preemptions) + " Instruction dispatches over a non-empty queue";
  return v;
}

// --- sensors and wand codec --------------------------------------------------------

Verdict sensor_filters() {
  Verdict v;
  sensors::KinectFrame frame{0, {sensors::synthetic_body(1, {-0.4, 0.0, 1.5}), sensors::synthetic_body(2, {0.0, 0.0, 2.5}),
                                 sensors::synthetic_body(3, {0.0, 0.0, 2.6})}};
  auto r = sensors::filter_bodies(frame);
  auto* kept = std::get_if<sensors::KinectFrame>(&r);
  v.check(kept && kept->bodies.size() == 2 && kept->bodies[0].body_id == 1 && kept->bodies[1].body_id == 2,
          "far body not dropped");
  frame.bodies[2] = sensors::synthetic_body(3, {0.0, 0.0, 2.0});
  r = sensors::filter_bodies(frame);
  v.check(std::holds_alternative<sensors::Suppressed>(r) && std::get<sensors::Suppressed>(r).in_range == 3,
          "three in-range bodies not suppressed");

  Rng rng(4242);
  std::size_t round_trips = 0;
  for (int i = 0; i < 20'000; ++i) {
    wand::WandFrame f;
    f.wand_id = rng.coin() ? WandColor::Red : WandColor::Blue;
    f.seq = static_cast<std::uint16_t>(rng.next());
    f.t = static_cast<std::uint32_t>(rng.next());
    switch (rng.index(4)) {
      case 0: {
        wand::Quaternion q{rng.uniform01() - 0.5, rng.uniform01() - 0.5, rng.uniform01() - 0.5, rng.uniform01() - 0.5};
        const double n = q.norm();
        if (n < 1e-3) continue;
        f.payload = wand::Orientation{wand::quantize({q.w / n, q.x / n, q.y / n, q.z / n})};
        break;
      }
      case 1: f.payload = wand::Button{rng.coin() ? wand::ButtonId::A : wand::ButtonId::B, rng.coin()}; break;
      case 2: f.payload = wand::Dial{static_cast<std::int16_t>(rng.next())}; break;
      default:
        f.payload = wand::Battery{static_cast<wand::BatteryState>(rng.index(3)), static_cast<std::uint8_t>(rng.index(101))};
    }
    auto bytes = wand::encode_frame(f);
    auto back = wand::try_decode(bytes);
    v.check(back.frame && *back.frame == f && back.size == bytes.size(), "round trip failed at case " + std::to_string(i));
    ++round_trips;
  }

  // Half random bytes, half damaged valid frames (bit flips, truncation).
  std::size_t decoded = 0;
  std::map<ErrorCode, std::size_t> errors;
  const auto seed_frame = wand::encode_frame({WandColor::Blue, 7, 1234, wand::Button{wand::ButtonId::A, true}});
  std::vector<std::uint8_t> buf;
  for (int i = 0; i < 1'000'000; ++i) {
    if (i % 2 == 0) {
      buf.resize(rng.index(wand::kMaxFrameSize + 8));
      for (auto& b : buf) b = static_cast<std::uint8_t>(rng.next());
    } else {
      buf = seed_frame;
      buf[rng.index(buf.size())] ^= static_cast<std::uint8_t>(1u << rng.index(8));
      if (rng.coin()) buf.resize(rng.index(buf.size() + 1));
    }
    auto res = wand::try_decode(buf);
    if (res.frame) ++decoded;
    else ++errors[res.error];
  }
  v.check(errors.size() >= 4, "fuzz reached only " + std::to_string(errors.size()) + " error kinds");
  if (v.ok) {
    v.detail = "range filter and suppression exact; " + std::to_string(round_trips) +
               " round trips; 1000000 fuzz buffers, " + std::to_string(decoded) + " decoded, " +
               std::to_string(errors.size()) + " distinct rejections, no throws";
  }
  return v;
}

// --- end to end --------------------------------------------------------------------

Verdict replay_determinism() {
  Verdict v;
  auto a = drive::run_trace(scratch("replay_a"));
  auto b = drive::run_trace(scratch("replay_b"));
  v.check(a.failure.empty(), "run 1: " + a.failure);
  v.check(b.failure.empty(), "run 2: " + b.failure);
  v.check(!a.performance_log.empty(), "empty performance log");
  v.check(a.performance_log == b.performance_log, "performance logs differ");
  v.check(a.performance_log.find("\thit\t") != std::string::npos || a.performance_log.find("input\thit") != std::string::npos,
          "trace hits missing from the log");
  if (v.ok) {
    const auto lines = std::count(a.performance_log.begin(), a.performance_log.end(), '\n');
    v.detail = std::to_string(lines) + " log lines byte-identical across two HTTP runs";
  }
  return v;
}

Verdict packaging() {
  Verdict v;
  auto run = drive::run_trace(scratch("package"));
  v.check(run.failure.empty(), run.failure);
  if (!v.ok) return v;
  const auto archive = fs::path(run.end_response.at("archive").at("archive").get<std::string>());
  const std::string expected = "F07_P01_P02_" + recorder::utc_date(1'760'000'000'000) + ".zip";
  v.check(archive.filename() == expected, "archive named " + archive.filename().string());
  auto check = recorder::verify_archive(archive);
  v.check(check.ok, check.problems.empty() ? "verification failed" : check.problems.front());

  std::set<std::string> on_disk;
  for (const auto& e : fs::recursive_directory_iterator(run.session_dir)) {
    if (e.is_regular_file()) on_disk.insert(fs::relative(e.path(), run.session_dir).generic_string());
  }
  std::set<std::string> in_manifest;
  for (const auto& f : check.manifest.at("files")) in_manifest.insert(f.at("path").get<std::string>());
  v.check(in_manifest == on_disk, "manifest streams differ from the opened streams");
  for (const char* must : {"performance.log", "wand_red.log", "wand_blue.log", "kinect.json", "e4_left/EDA.csv",
                           "e4_right/BVP.csv", "session.json"}) {
    v.check(in_manifest.count(must) == 1, std::string("missing stream ") + must);
  }
  if (v.ok) v.detail = archive.filename().string() + ", " + std::to_string(in_manifest.size()) + " streams verified";
  return v;
}

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"screening-scoring", 1, screening},
      {"analytics-aggregates", 10, analytics},
      {"event-rates", 1, event_rates},
      {"activity-fsm-suites", 30, activity_suites},
      {"music-probability-policy", 10, music_policy},
      {"feedback-rate-limiting", 10, feedback_storms},
      {"sensor-filters-and-wand-codec", 60, sensor_filters},
      {"replay-determinism", 30, replay_determinism},
      {"packaging", 30, packaging},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && secs > c.budget_s) v = {false, "took " + fmt(secs, 2) + " s, budget " + fmt(c.budget_s, 0) + " s"};
    if (!v.ok) ++failed;
    std::printf("%s %-32s %6.2fs  %s\n", v.ok ? "PASS" : "FAIL", c.name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  fs::remove_all(fs::temp_directory_path() / ("sarvr_acceptance_" + std::to_string(::getpid())));
  return failed == 0 ? 0 : 1;
}
