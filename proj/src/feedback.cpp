#include "sarvr/feedback.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace sarvr {

std::string_view to_string(FeedbackCategory c) {
  switch (c) {
    case FeedbackCategory::Instruction: return "Instruction";
    case FeedbackCategory::Corrective: return "Corrective";
    case FeedbackCategory::Celebration: return "Celebration";
    case FeedbackCategory::Encouragement: return "Encouragement";
  }
  return "Encouragement";
}

std::optional<FeedbackCategory> feedback_category_from_string(std::string_view s) {
  for (auto c : {FeedbackCategory::Instruction, FeedbackCategory::Corrective, FeedbackCategory::Celebration,
                 FeedbackCategory::Encouragement}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::Humanoid: return "Humanoid";
    case AdapterKind::Animal: return "Animal";
    case AdapterKind::Avatar: return "Avatar";
    case AdapterKind::Simulated: return "Simulated";
  }
  return "Simulated";
}

std::optional<AdapterKind> adapter_kind_from_string(std::string_view s) {
  for (auto k : {AdapterKind::Humanoid, AdapterKind::Animal, AdapterKind::Avatar, AdapterKind::Simulated}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

nlohmann::json to_json(const FeedbackEvent& e) {
  nlohmann::json j{{"category", to_string(e.category)},
                   {"code", e.code},
                   {"target", to_string(e.target)},
                   {"issued_at", e.issued_at}};
  if (!e.args.empty()) j["args"] = e.args;
  return j;
}

nlohmann::json to_json(const RobotCommand& c) {
  nlohmann::json j{{"adapter", to_string(c.adapter_kind)}, {"behavior_id", c.behavior_id}};
  j["speech_text"] = c.speech_text ? nlohmann::json(*c.speech_text) : nlohmann::json(nullptr);
  if (!c.params.empty()) j["params"] = c.params;
  return j;
}

std::span<const std::string_view> animal_tricks() {
  static constexpr std::array<std::string_view, 8> tricks = {"sit",  "shake", "dance", "rollover",
                                                             "paw",  "down",  "spin",  "bark"};
  return tricks;
}

std::string side_code(Side side, std::string_view suffix) {
  std::string out(to_string(side));
  out += suffix;
  return out;
}

std::string trick_code(std::string_view trick) { return "Trick:" + std::string(trick); }

namespace {

bool is_trick(std::string_view name) {
  auto tricks = animal_tricks();
  return std::find(tricks.begin(), tricks.end(), name) != tricks.end();
}

struct CoachSeed {
  std::string_view code;
  FeedbackCategory category;
  Target target;
  std::string_view gesture;
  std::string_view speech;
};

// Side-specific codes are generated for both sides from these.
struct SidedSeed {
  std::string_view suffix;
  FeedbackCategory category;
  std::string_view gesture;
  std::string_view speech;
};

constexpr std::string_view kEncouragement = "You are doing great, {target}!";

constexpr std::array<CoachSeed, 15> kCoach = {{
    {"MusicTutorial", FeedbackCategory::Instruction, Target::Both, "point_screen",
     "Hit the drum with your wand when a note crosses the green zone."},
    {"MusicFreePlay", FeedbackCategory::Instruction, Target::Both, "open_arms",
     "Play the drum any way you like. Enjoy the music!"},
    {"MusicComplete", FeedbackCategory::Celebration, Target::Both, "celebrate",
     "Wonderful drumming, {left} and {right}! The song is finished."},
    {"FishingTutorial", FeedbackCategory::Instruction, Target::Both, "point_screen",
     "{right} casts and hooks the fish. {left} catches it with the net and puts it in a bucket."},
    {"FishDeposited", FeedbackCategory::Celebration, Target::Both, "thumbs_up",
     "Nice catch, {left} and {right}!"},
    {"FishingComplete", FeedbackCategory::Celebration, Target::Both, "celebrate",
     "You caught all the fish together. Great teamwork!"},
    {"PaintingTutorial", FeedbackCategory::Instruction, Target::Both, "point_screen",
     "Pick a color from your palette and paint the segments with your numbers."},
    {"PaintingComplete", FeedbackCategory::Celebration, Target::Both, "celebrate",
     "What a beautiful painting, {left} and {right}!"},
    {"SpellingTutorial", FeedbackCategory::Instruction, Target::Both, "point_screen",
     "{left} picks the red letters and {right} picks the blue letters. Spell the word together."},
    {"SpellingHint", FeedbackCategory::Instruction, Target::Both, "point_screen",
     "The word to spell is {word}."},
    {"SpellingComplete", FeedbackCategory::Celebration, Target::Both, "celebrate",
     "You spelled {word}! Watch the dog do the trick."},
    {"KeepGoing", FeedbackCategory::Encouragement, Target::Both, "nod", "Keep going, you are doing wonderfully!"},
    {"GreatTeamwork", FeedbackCategory::Encouragement, Target::Both, "clap",
     "{left} and {right}, you make a great team!"},
    {"NiceWork", FeedbackCategory::Encouragement, Target::Both, "thumbs_up", "Nice work, both of you!"},
    {"WelcomeBack", FeedbackCategory::Instruction, Target::Both, "wave", "Welcome back! Let's continue."},
}};

constexpr std::array<SidedSeed, 16> kSided = {{
    {"PlayingFast", FeedbackCategory::Corrective, "gesture_slow_down",
     "Try to wait until the note reaches the green zone."},
    {"PlayingSlow", FeedbackCategory::Corrective, "gesture_speed_up",
     "Try to hit a little earlier, when the note is in the green zone."},
    {"MissReminder", FeedbackCategory::Corrective, "point_screen",
     "Watch for the notes coming to your drum."},
    {"Inactive", FeedbackCategory::Corrective, "beckon", "Your notes are coming, give the drum a hit!"},
    {"CastReminder", FeedbackCategory::Corrective, "mime_cast", "Make a casting motion with your wand."},
    {"HookReminder", FeedbackCategory::Corrective, "point_screen",
     "Move your rod over a fish and press the button to hook it."},
    {"NetReminder", FeedbackCategory::Corrective, "point_screen",
     "Move your net to the fish on the line and press the button."},
    {"BucketReminder", FeedbackCategory::Corrective, "point_screen",
     "Move the net over a bucket and let go of the button."},
    {"WrongBucket", FeedbackCategory::Corrective, "point_screen", "Look for the bucket that is lit up."},
    {"AskPartner", FeedbackCategory::Encouragement, "open_arms", "{target}, you can ask {partner} for help."},
    {"WrongColor", FeedbackCategory::Corrective, "point_screen",
     "That segment needs a different color from your palette."},
    {"PartnerSegment", FeedbackCategory::Corrective, "point_partner",
     "That number belongs to {partner}. Maybe {partner} can paint it."},
    {"PaintReminder", FeedbackCategory::Corrective, "point_screen",
     "Pick a color and find a segment with your number."},
    {"WrongLetter", FeedbackCategory::Corrective, "point_screen",
     "Look for the next letter of the word in your color."},
    {"YourTurn", FeedbackCategory::Instruction, "point_participant", "{target}, it is your turn to pick a letter."},
    {"GoodJob", FeedbackCategory::Encouragement, "thumbs_up", "Good job, {target}!"},
}};

VocabularyEntry coach_entry(FeedbackCategory category, Target target, std::string_view gesture,
                            std::string_view speech) {
  VocabularyEntry e;
  e.category = category;
  e.target = target;
  if (category == FeedbackCategory::Corrective) e.encouragement = std::string(kEncouragement);
  e.templates[AdapterKind::Humanoid] = {std::string(gesture), std::string(speech)};
  e.templates[AdapterKind::Avatar] = {"bubble", std::string(speech)};
  return e;
}

std::string expand(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size() + 16);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string key(tmpl.substr(i + 1, close - i - 1));
        if (auto it = vars.find(key); it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace

Vocabulary Vocabulary::seed() {
  Vocabulary v;
  for (const auto& s : kCoach) v.add(std::string(s.code), coach_entry(s.category, s.target, s.gesture, s.speech));
  for (const auto& s : kSided) {
    for (Side side : {Side::Left, Side::Right}) {
      v.add(side_code(side, s.suffix), coach_entry(s.category, target_of(side), s.gesture, s.speech));
    }
  }
  for (auto trick : animal_tricks()) {
    VocabularyEntry e;
    e.category = FeedbackCategory::Celebration;
    e.target = Target::Both;
    e.templates[AdapterKind::Animal] = {std::string(trick), std::nullopt};
    v.add(trick_code(trick), std::move(e));
  }
  return v;
}

void Vocabulary::add(const std::string& code, VocabularyEntry entry) {
  if (code.empty()) throw Error(ErrorCode::InvalidVocabulary, "empty code");
  if (entry.templates.empty()) throw Error(ErrorCode::InvalidVocabulary, code + ": no templates");
  if (entry.category == FeedbackCategory::Corrective && entry.encouragement.empty()) {
    throw Error(ErrorCode::InvalidVocabulary, code + ": corrective entry lacks an encouragement clause");
  }
  for (const auto& [kind, t] : entry.templates) {
    if (t.behavior_id.empty()) throw Error(ErrorCode::InvalidVocabulary, code + ": empty behavior_id");
    if (kind == AdapterKind::Animal) {
      if (t.speech) throw Error(ErrorCode::InvalidVocabulary, code + ": animal templates carry no speech");
      if (!is_trick(t.behavior_id)) {
        throw Error(ErrorCode::InvalidVocabulary, code + ": '" + t.behavior_id + "' is not a built-in trick");
      }
    }
    if (kind == AdapterKind::Avatar && (!t.speech || t.speech->empty())) {
      throw Error(ErrorCode::InvalidVocabulary, code + ": avatar templates need speech text");
    }
  }
  entries_.insert_or_assign(code, std::move(entry));
}

bool Vocabulary::contains(std::string_view code) const { return entries_.find(code) != entries_.end(); }

const VocabularyEntry& Vocabulary::at(std::string_view code) const {
  auto it = entries_.find(code);
  if (it == entries_.end()) throw Error(ErrorCode::UnknownCode, std::string(code));
  return it->second;
}

bool Vocabulary::supports(std::string_view code, AdapterKind kind) const {
  auto it = entries_.find(code);
  if (it == entries_.end()) return false;
  // Simulated can stand in for any robot.
  return kind == AdapterKind::Simulated || it->second.templates.count(kind) != 0;
}

std::vector<std::string> Vocabulary::codes() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [code, _] : entries_) out.push_back(code);
  return out;
}

FeedbackEvent Vocabulary::make_event(std::string_view code, Millis now, std::map<std::string, std::string> args) const {
  const auto& entry = at(code);
  return FeedbackEvent{entry.category, std::string(code), entry.target, now, std::move(args)};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidVocabulary, "vocabulary must be a JSON object");
  Vocabulary v;
  for (const auto& [code, body] : j.items()) {
    try {
      VocabularyEntry e;
      auto cat = feedback_category_from_string(body.at("category").get<std::string>());
      if (!cat) throw Error(ErrorCode::InvalidVocabulary, code + ": unknown category");
      e.category = *cat;
      auto target = target_from_string(body.value("target", std::string("Both")));
      if (!target) throw Error(ErrorCode::InvalidVocabulary, code + ": unknown target");
      e.target = *target;
      e.encouragement = body.value("encouragement", std::string());
      for (const auto& [kind_name, t] : body.at("templates").items()) {
        auto kind = adapter_kind_from_string(kind_name);
        if (!kind) throw Error(ErrorCode::InvalidVocabulary, code + ": unknown adapter " + kind_name);
        AdapterTemplate tmpl;
        tmpl.behavior_id = t.at("behavior").get<std::string>();
        if (t.contains("speech") && !t["speech"].is_null()) tmpl.speech = t["speech"].get<std::string>();
        e.templates[*kind] = std::move(tmpl);
      }
      v.add(code, std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidVocabulary, code + ": " + ex.what());
    }
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open vocabulary " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorCode::InvalidVocabulary, ex.what());
  }
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [code, e] : entries_) {
    nlohmann::json body{{"category", to_string(e.category)}, {"target", to_string(e.target)}};
    if (!e.encouragement.empty()) body["encouragement"] = e.encouragement;
    nlohmann::json templates = nlohmann::json::object();
    for (const auto& [kind, t] : e.templates) {
      nlohmann::json tj{{"behavior", t.behavior_id}};
      if (t.speech) tj["speech"] = *t.speech;
      templates[std::string(to_string(kind))] = std::move(tj);
    }
    body["templates"] = std::move(templates);
    out[code] = std::move(body);
  }
  return out;
}

RobotCommand translate(const Vocabulary& vocab, const FeedbackEvent& event, AdapterKind kind,
                       const ParticipantNames& names) {
  const auto& entry = vocab.at(event.code);

  const AdapterTemplate* tmpl = nullptr;
  if (auto it = entry.templates.find(kind); it != entry.templates.end()) {
    tmpl = &it->second;
  } else if (kind == AdapterKind::Simulated) {
    for (auto k : {AdapterKind::Humanoid, AdapterKind::Avatar, AdapterKind::Animal}) {
      if (auto f = entry.templates.find(k); f != entry.templates.end()) {
        tmpl = &f->second;
        break;
      }
    }
  }
  if (tmpl == nullptr) {
    throw Error(ErrorCode::UnsupportedAdapter, event.code + " on " + std::string(to_string(kind)));
  }

  std::map<std::string, std::string> vars = event.args;
  vars["left"] = names.left;
  vars["right"] = names.right;
  switch (event.target) {
    case Target::Left:
      vars["target"] = names.left;
      vars["partner"] = names.right;
      break;
    case Target::Right:
      vars["target"] = names.right;
      vars["partner"] = names.left;
      break;
    case Target::Both:
      vars["target"] = names.left + " and " + names.right;
      vars["partner"] = "your partner";
      break;
  }

  RobotCommand cmd;
  cmd.adapter_kind = kind;
  cmd.behavior_id = kind == AdapterKind::Simulated && !entry.templates.count(kind) ? "sim:" + tmpl->behavior_id
                                                                                   : tmpl->behavior_id;
  if (tmpl->speech && kind != AdapterKind::Animal) {
    std::string speech;
    if (entry.category == FeedbackCategory::Corrective) {
      speech = expand(entry.encouragement, vars);
      speech += ' ';
    }
    speech += expand(*tmpl->speech, vars);
    cmd.speech_text = std::move(speech);
  }
  cmd.params["code"] = event.code;
  cmd.params["target"] = std::string(to_string(event.target));
  return cmd;
}

RobotCommand translate(const Vocabulary& vocab, std::string_view code, AdapterKind kind,
                       const ParticipantNames& names) {
  return translate(vocab, vocab.make_event(code, 0), kind, names);
}

// ---------------------------------------------------------------------------

FeedbackPolicy::FeedbackPolicy(std::shared_ptr<const Vocabulary> vocab, Millis min_gap, Millis max_age)
    : vocab_(std::move(vocab)), min_gap_(min_gap), max_age_(max_age) {
  if (!vocab_) throw Error(ErrorCode::InvalidVocabulary, "policy needs a vocabulary");
}

bool FeedbackPolicy::window_open(Millis now) const {
  return !last_utterance_at_ || now - *last_utterance_at_ >= min_gap_;
}

std::optional<FeedbackEvent> FeedbackPolicy::submit(const FeedbackEvent& event, Millis now) {
  if (!vocab_->contains(event.code)) throw Error(ErrorCode::UnknownCode, event.code);

  auto dup = std::find_if(pending_.begin(), pending_.end(),
                          [&](const Pending& p) { return p.event.code == event.code; });
  auto said = last_dispatched_.find(event.code);
  bool said_recently = said != last_dispatched_.end() && now - said->second < min_gap_;
  if (dup != pending_.end() || said_recently) {
    ++coalesced_;
  } else {
    pending_.push_back({event, next_seq_++});
  }
  return poll(now);
}

std::optional<FeedbackEvent> FeedbackPolicy::poll(Millis now) {
  if (!window_open(now)) return std::nullopt;
  return take_best(now);
}

std::optional<FeedbackEvent> FeedbackPolicy::take_best(Millis now) {
  std::erase_if(pending_, [&](const Pending& p) { return now - p.event.issued_at > max_age_; });
  if (pending_.empty()) return std::nullopt;
  auto best = std::min_element(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
    auto ka = std::tuple(priority_rank(a.event.category), a.event.issued_at, a.seq);
    auto kb = std::tuple(priority_rank(b.event.category), b.event.issued_at, b.seq);
    return ka < kb;
  });
  FeedbackEvent out = std::move(best->event);
  pending_.erase(best);
  last_utterance_at_ = now;
  last_dispatched_[out.code] = now;
  return out;
}

}  // namespace sarvr
