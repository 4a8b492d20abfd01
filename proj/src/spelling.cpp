#include "sarvr/spelling.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sarvr::spelling {

Lexicon Lexicon::builtin() {
  Lexicon lex;
  for (auto trick : animal_tricks()) lex.words_.emplace_back(trick);
  return lex;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string word = line.substr(first, last - first + 1);
    if (!std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; })) {
      throw Error(ErrorCode::ParseError, "lexicon words must be lowercase a-z: '" + word + "'");
    }
    if (!lex.contains(word)) lex.words_.push_back(std::move(word));
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open lexicon " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Lexicon::contains(std::string_view word) const {
  return std::find(words_.begin(), words_.end(), word) != words_.end();
}

std::vector<std::string> Lexicon::words_for_level(int level) const {
  std::vector<std::string> out;
  for (const auto& w : words_) {
    const auto n = w.size();
    bool fits = level <= 2 ? n <= 3 : level == 3 ? (n >= 4 && n <= 5) : n >= 5;
    if (fits) out.push_back(w);
  }
  if (out.empty()) out = words_;
  std::sort(out.begin(), out.end());
  return out;
}

const Letter* SpellingRound::letter(int letter_id) const {
  auto it = std::find_if(pool.begin(), pool.end(), [&](const Letter& l) { return l.letter_id == letter_id; });
  return it == pool.end() ? nullptr : &*it;
}

std::optional<Side> SpellingRound::active_side() const {
  if (complete()) return std::nullopt;
  if (const Letter* planned_letter = letter(planned[next_index]); planned_letter && !planned_letter->used) {
    return owner_of(planned_letter->color);
  }
  for (const auto& l : pool) {
    if (!l.used && l.ch == word[next_index]) return owner_of(l.color);
  }
  return std::nullopt;
}

std::string SpellingRound::spelled() const {
  std::string out;
  for (int id : selected) out += letter(id)->ch;
  return out;
}

SpellingRound generate_round(const Lexicon& lexicon, const std::string& word, int excess_count, Rng& rng,
                             Millis now) {
  if (!lexicon.contains(word)) throw Error(ErrorCode::UnknownWord, word);
  if (excess_count < 0 || excess_count > kMaxExcess) {
    throw Error(ErrorCode::OutOfRange, "excess_count must be within 0.." + std::to_string(kMaxExcess));
  }

  SpellingRound round;
  round.word = word;
  round.excess_count = excess_count;
  round.idle_since = round.last_cue_at = now;

  // Word positions alternate owner from a random starting color.
  std::vector<Letter> tiles;
  const bool red_first = rng.coin();
  int red = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const bool is_red = (i % 2 == 0) == red_first;
    red += is_red ? 1 : 0;
    tiles.push_back({0, word[i], is_red ? WandColor::Red : WandColor::Blue, false});
  }

  // Excess colors bring the pool to an even split (odd totals pick the extra at random).
  const int total = static_cast<int>(word.size()) + excess_count;
  int red_target = total / 2;
  if (total % 2 == 1 && rng.coin()) red_target += 1;
  int red_excess = std::clamp(red_target - red, 0, excess_count);
  std::vector<WandColor> excess_colors;
  for (int i = 0; i < excess_count; ++i) excess_colors.push_back(i < red_excess ? WandColor::Red : WandColor::Blue);
  for (std::size_t i = excess_colors.size(); i > 1; --i) std::swap(excess_colors[i - 1], excess_colors[rng.index(i)]);
  for (int i = 0; i < excess_count; ++i) {
    tiles.push_back({0, static_cast<char>('a' + rng.index(26)), excess_colors[static_cast<std::size_t>(i)], false});
  }

  // Display order is shuffled; letter ids follow display order.
  std::vector<std::size_t> order(tiles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  round.pool.resize(tiles.size());
  round.planned.resize(word.size());
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const std::size_t src = order[slot];
    Letter l = tiles[src];
    l.letter_id = static_cast<int>(slot);
    round.pool[slot] = l;
    if (src < word.size()) round.planned[src] = l.letter_id;
  }
  return round;
}

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::NotYourColor: return "NotYourColor";
    case Rejection::WrongLetter: return "WrongLetter";
    case Rejection::AlreadyUsed: return "AlreadyUsed";
    case Rejection::RoundComplete: return "RoundComplete";
  }
  return "WrongLetter";
}

Result select_letter(SpellingRound& round, Side side, int letter_id, Millis now) {
  Result r;
  auto it = std::find_if(round.pool.begin(), round.pool.end(), [&](const Letter& l) { return l.letter_id == letter_id; });
  if (it == round.pool.end()) throw Error(ErrorCode::UnknownLetterId, std::to_string(letter_id));

  if (round.complete()) {
    r.rejection = Rejection::RoundComplete;
  } else if (it->used) {
    r.rejection = Rejection::AlreadyUsed;
  } else if (owner_of(it->color) != side) {
    r.rejection = Rejection::NotYourColor;
  } else if (it->ch != round.word[round.next_index]) {
    r.rejection = Rejection::WrongLetter;
    r.output.emit(FeedbackCategory::Corrective, side_code(side, "WrongLetter"), target_of(side), now);
  }
  if (r.rejection) {
    r.output.effect("letter_rejected",
                    {{"side", to_string(side)}, {"letter_id", letter_id}, {"reason", to_string(*r.rejection)}});
    return r;
  }

  // Keep the plan a bijection when a player picks an equivalent tile.
  const int was_planned = round.planned[round.next_index];
  if (was_planned != letter_id) {
    for (std::size_t k = round.next_index + 1; k < round.planned.size(); ++k) {
      if (round.planned[k] == letter_id) {
        round.planned[k] = was_planned;
        break;
      }
    }
    round.planned[round.next_index] = letter_id;
  }

  it->used = true;
  round.selected.push_back(letter_id);
  ++round.next_index;
  round.idle_since = now;
  r.output.score_delta = 1;
  r.output.effect("letter_selected", {{"side", to_string(side)},
                                      {"letter_id", letter_id},
                                      {"char", std::string(1, it->ch)},
                                      {"next_index", round.next_index}});
  if (round.complete()) {
    r.output.emit(FeedbackCategory::Celebration, "SpellingComplete", Target::Both, now, {{"word", round.word}});
    r.output.effect("trick", {{"name", round.word}});
  }
  return r;
}

std::optional<FeedbackEvent> hint(const SpellingRound& round, Millis now) {
  if (round.complete()) return std::nullopt;
  return FeedbackEvent{FeedbackCategory::Instruction, "SpellingHint", Target::Both, now, {{"word", round.word}}};
}

std::vector<FeedbackEvent> turn_timeout(SpellingRound& round, Millis now, Millis timeout) {
  std::vector<FeedbackEvent> out;
  auto side = round.active_side();
  if (!side) return out;
  if (now - std::max(round.idle_since, round.last_cue_at) > timeout) {
    out.push_back({FeedbackCategory::Instruction, side_code(*side, "YourTurn"), target_of(*side), now, {}});
    round.last_cue_at = now;
  }
  return out;
}

TrickCommand complete(const SpellingRound& round) {
  if (!round.complete()) {
    throw Error(ErrorCode::RoundIncomplete,
                std::to_string(round.next_index) + "/" + std::to_string(round.word.size()) + " letters");
  }
  return TrickCommand{round.word};
}

Rect tile_rect(std::size_t index, std::size_t pool_size) {
  const std::size_t cols = std::max<std::size_t>(1, std::min<std::size_t>(pool_size, 8));
  const double w = 0.8 / static_cast<double>(cols);
  const std::size_t r = index / cols;
  const std::size_t c = index % cols;
  const double x0 = 0.1 + static_cast<double>(c) * w;
  const double y0 = 0.45 + static_cast<double>(r) * 0.15;
  return {x0, y0, x0 + w - 0.01, y0 + 0.12};
}

// ---------------------------------------------------------------------------

SpellingActivity::SpellingActivity(SpellingConfig config, Lexicon lexicon, std::uint64_t seed)
    : config_(std::move(config)), lexicon_(std::move(lexicon)), rng_(seed), excess_(config_.excess_count) {
  if (config_.level < kTutorialLevel || config_.level > kMaxLevel) {
    throw Error(ErrorCode::InvalidConfig, "spelling level out of range");
  }
  if (config_.rounds < 1) throw Error(ErrorCode::InvalidConfig, "spelling needs at least one round");
  if (excess_ < 0 || excess_ > kMaxExcess) throw Error(ErrorCode::InvalidConfig, "excess_count out of range");
  for (const auto& w : config_.words) {
    if (!lexicon_.contains(w)) throw Error(ErrorCode::UnknownWord, w);
  }
  if (config_.level == kTutorialLevel) excess_ = 0;
}

StepOutput SpellingActivity::start(Millis now) {
  StepOutput out;
  last_t_ = now;
  rounds_completed_ = 0;
  if (config_.level == kTutorialLevel) out.emit(FeedbackCategory::Instruction, "SpellingTutorial", Target::Both, now);
  out.append(next_round(now));
  return out;
}

StepOutput SpellingActivity::next_round(Millis now) {
  std::string word;
  if (!config_.words.empty()) {
    word = config_.words[static_cast<std::size_t>(rounds_completed_) % config_.words.size()];
  } else {
    auto choices = lexicon_.words_for_level(config_.level);
    word = choices[rng_.index(choices.size())];
  }
  round_ = generate_round(lexicon_, word, excess_, rng_, now);
  StepOutput out;
  nlohmann::json pool = nlohmann::json::array();
  for (const auto& l : round_.pool) {
    pool.push_back({{"id", l.letter_id}, {"char", std::string(1, l.ch)}, {"color", to_string(l.color)}});
  }
  out.effect("round_started", {{"round", rounds_completed_ + 1}, {"word", word}, {"pool", std::move(pool)}});
  return out;
}

Result SpellingActivity::step(const SpellingEvent& event) {
  return std::visit(
      [this](const auto& e) -> Result {
        using E = std::decay_t<decltype(e)>;
        if (e.t < last_t_) {
          throw Error(ErrorCode::EventOutOfOrder, std::to_string(e.t) + " < " + std::to_string(last_t_));
        }
        last_t_ = e.t;
        Result r;
        if constexpr (std::is_same_v<E, SelectLetter> || std::is_same_v<E, Grab>) {
          if (complete()) return r;
          int letter_id = -1;
          if constexpr (std::is_same_v<E, SelectLetter>) {
            letter_id = e.letter_id;
          } else {
            const Point at = cursor_[e.side == Side::Left ? 0 : 1];
            for (std::size_t i = 0; i < round_.pool.size(); ++i) {
              if (tile_rect(i, round_.pool.size()).contains(at)) letter_id = round_.pool[i].letter_id;
            }
            if (letter_id < 0) return r;
          }
          r = select_letter(round_, e.side, letter_id, e.t);
          if (r.accepted() && round_.complete()) {
            ++rounds_completed_;
            if (complete()) {
              r.output.effect("activity_complete", {{"rounds", rounds_completed_}});
            } else {
              r.output.append(next_round(e.t));
            }
          }
        } else if constexpr (std::is_same_v<E, Move>) {
          cursor_[e.side == Side::Left ? 0 : 1] = {std::clamp(e.xy.x, 0.0, 1.0), std::clamp(e.xy.y, 0.0, 1.0)};
        } else if constexpr (std::is_same_v<E, HintRequest>) {
          if (auto h = hint(round_, e.t)) r.output.feedback.push_back(std::move(*h));
        } else if constexpr (std::is_same_v<E, SetExcess>) {
          if (e.excess_count < 0 || e.excess_count > kMaxExcess) {
            throw Error(ErrorCode::OutOfRange, "excess_count must be within 0.." + std::to_string(kMaxExcess));
          }
          excess_ = e.excess_count;
          r.output.effect("excess_changed", {{"excess_count", excess_}});
        } else {
          if (!complete()) {
            for (auto& f : turn_timeout(round_, e.t, config_.turn_timeout)) r.output.feedback.push_back(std::move(f));
          }
        }
        return r;
      },
      event);
}

nlohmann::json SpellingActivity::summary() const {
  auto side = round_.active_side();
  return {{"level", config_.level},
          {"word", round_.word},
          {"spelled", round_.spelled()},
          {"next_index", round_.next_index},
          {"active_side", side ? nlohmann::json(to_string(*side)) : nlohmann::json(nullptr)},
          {"excess_count", excess_},
          {"rounds_completed", rounds_completed_},
          {"rounds", config_.rounds},
          {"complete", complete()}};
}

}  // namespace sarvr::spelling
