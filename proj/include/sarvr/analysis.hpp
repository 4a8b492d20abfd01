#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sarvr/common.hpp"

namespace sarvr::analysis {

// --- screening instruments ---------------------------------------------------------

inline constexpr std::size_t kAesItems = 18;
inline constexpr int kAesMin = 18;
inline constexpr int kAesMax = 72;

/// Sum of 18 items scored 1..4. Throws BadItemCount, OutOfRange.
int score_aes(std::span<const int> items);

enum class Cognition : std::uint8_t { Normal, MCI, Dementia };

std::string_view to_string(Cognition c);

/// 17..22 Normal, 15..16 MCI, below 15 Dementia. Throws OutOfRange outside 0..22.
Cognition classify_sage(int score);

// --- questionnaire ratings ---------------------------------------------------------

inline constexpr std::size_t kCategoryCount = 6;

enum class RatingCategory : std::uint8_t {
  WandComfort,
  WandConfidence,
  RobotComfort,
  RobotConfidence,
  ScreenComfort,
  ScreenConfidence,
};

inline constexpr std::array<RatingCategory, kCategoryCount> kCategories{
    RatingCategory::WandComfort,  RatingCategory::WandConfidence,  RatingCategory::RobotComfort,
    RatingCategory::RobotConfidence, RatingCategory::ScreenComfort, RatingCategory::ScreenConfidence};

/// Snake-case column name, e.g. "wand_comfort".
std::string_view to_string(RatingCategory c);

struct RatingSheet {
  std::string participant_id;
  int session_index = 0;
  /// Likert 1..5, in kCategories order.
  std::array<int, kCategoryCount> items{};

  /// Throws OutOfRange.
  void validate() const;
};

struct Improvements {
  /// Mean of (final - first) per category.
  std::array<double, kCategoryCount> category_delta{};
  /// Mean of the six category means.
  double overall = 0.0;
  std::size_t participants = 0;
};

/// Throws UnmatchedParticipant when the two sets disagree on who took part.
Improvements rating_improvements(const std::vector<RatingSheet>& first, const std::vector<RatingSheet>& final);

/// Rows: participant_id,session_index,<six categories>. A header row is optional.
/// Throws ParseError, OutOfRange.
std::vector<RatingSheet> parse_ratings_csv(std::string_view text);

/// Each participant's lowest and highest session_index sheets.
std::pair<std::vector<RatingSheet>, std::vector<RatingSheet>> first_and_final(const std::vector<RatingSheet>& sheets);

// --- Wilcoxon signed-rank ----------------------------------------------------------

inline constexpr std::size_t kExactLimit = 20;

enum class Method : std::uint8_t { Exact, Normal };

std::string_view to_string(Method m);

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n_effective = 0;
  double p_two_sided = 1.0;
  Method method = Method::Exact;
  /// Only meaningful for the normal approximation.
  double z = 0.0;
};

/// Differences are b - a. Zeros are dropped, ties get average ranks. Exact
/// null distribution for n_effective <= 20, tie-corrected normal approximation
/// with continuity correction above. Throws AllZeroDifferences.
WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs);
WilcoxonResult wilcoxon_differences(std::span<const double> differences);

/// Averaged ranks of |d| for the non-zero differences, in input order.
std::vector<double> signed_ranks(std::span<const double> nonzero);

enum class Pooling : std::uint8_t {
  /// Every participant x category is one pair.
  Pairs,
  /// One pair per category: (mean first, mean final).
  CategoryMeans,
};

std::vector<std::pair<double, double>> pool(const std::vector<RatingSheet>& first,
                                            const std::vector<RatingSheet>& final, Pooling mode);

// --- coded behaviour events --------------------------------------------------------

enum class EventKind : std::uint8_t { ParticipantInteraction, RobotIntervention, ResearcherIntervention };

inline constexpr std::array<EventKind, 3> kEventKinds{EventKind::ParticipantInteraction, EventKind::RobotIntervention,
                                                      EventKind::ResearcherIntervention};

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct CodedEvent {
  double t_min = 0.0;
  EventKind kind = EventKind::ParticipantInteraction;
};

struct CodedEventLog {
  double duration_min = 0.0;
  std::vector<CodedEvent> events;
};

struct EventRates {
  double duration_min = 0.0;
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> per_minute{};

  double rate(EventKind k) const { return per_minute[static_cast<std::size_t>(k)]; }
};

/// Throws ZeroDuration, OutOfRange for events outside [0, duration].
EventRates event_rates(const CodedEventLog& log);

/// Rows "t_min,kind"; duration from a "# duration_min=<x>" line unless given.
/// Throws ParseError.
CodedEventLog parse_event_log(std::string_view text, std::optional<double> duration_min = std::nullopt);

// --- reports -----------------------------------------------------------------------

std::string improvements_csv(const Improvements& imp);
std::string improvements_table(const Improvements& imp);
std::string wilcoxon_table(const WilcoxonResult& w);
std::string rates_csv(const EventRates& r);
std::string rates_table(const EventRates& r);

}  // namespace sarvr::analysis
