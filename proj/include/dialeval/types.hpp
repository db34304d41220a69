// Core domain types shared by the whole workbench: concepts, frames,
// turns, dialogues, scenarios, and the annotation record attached to
// every turn. All types are plain values; treat them as immutable after
// construction and they are safe to share across threads.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// A structural invariant of the corpus does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Route not present in the timetable.
class UnknownRouteError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Slots and concepts
// ---------------------------------------------------------------------------

enum class Slot {
  DepartureCity,
  ArrivalCity,
  DepartureTime,
  ArrivalTime,
  TrainType,
  ServiceQuery,
  CostOfTicketQuery,
  MoreInfoQuery,
  Confirmation,
};

inline constexpr std::array<Slot, 9> kAllSlots = {
    Slot::DepartureCity,     Slot::ArrivalCity,   Slot::DepartureTime,
    Slot::ArrivalTime,       Slot::TrainType,     Slot::ServiceQuery,
    Slot::CostOfTicketQuery, Slot::MoreInfoQuery, Slot::Confirmation,
};

// Marker value carried by value-less query concepts ("cost-of-ticket?").
inline constexpr const char* kQueryValue = "QUERY";

inline std::string_view slot_name(Slot s) {
  switch (s) {
    case Slot::DepartureCity: return "departure-city";
    case Slot::ArrivalCity: return "arrival-city";
    case Slot::DepartureTime: return "departure-time";
    case Slot::ArrivalTime: return "arrival-time";
    case Slot::TrainType: return "train-type";
    case Slot::ServiceQuery: return "service-query";
    case Slot::CostOfTicketQuery: return "cost-of-ticket-query";
    case Slot::MoreInfoQuery: return "more-info-query";
    case Slot::Confirmation: return "confirmation";
  }
  return "unknown";
}

inline std::optional<Slot> slot_from_name(std::string_view name) {
  for (Slot s : kAllSlots)
    if (slot_name(s) == name) return s;
  return std::nullopt;
}

struct Concept {
  Slot slot = Slot::DepartureCity;
  std::string value;

  bool operator==(const Concept&) const = default;
};

// An unordered set of concepts, at most one per slot. The empty frame is
// legal and denotes total understanding failure.
class SemanticFrame {
 public:
  SemanticFrame() = default;
  SemanticFrame(std::initializer_list<Concept> concepts) {
    for (const auto& c : concepts) set(c.slot, c.value);
  }

  bool empty() const { return concepts_.empty(); }
  std::size_t size() const { return concepts_.size(); }
  bool has(Slot s) const { return concepts_.count(s) > 0; }

  std::optional<std::string> value(Slot s) const {
    auto it = concepts_.find(s);
    if (it == concepts_.end()) return std::nullopt;
    return it->second;
  }

  void set(Slot s, std::string value) { concepts_[s] = std::move(value); }
  void erase(Slot s) { concepts_.erase(s); }

  // Keyed by slot in enum order; iteration is deterministic.
  const std::map<Slot, std::string>& concepts() const { return concepts_; }

  bool operator==(const SemanticFrame&) const = default;

 private:
  std::map<Slot, std::string> concepts_;
};

// ---------------------------------------------------------------------------
// Time-of-day helpers
// ---------------------------------------------------------------------------

// Minutes since midnight.
inline int parse_minute(std::string_view hhmm) {
  auto colon = hhmm.find(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 >= hhmm.size())
    throw ParseError("bad time of day '" + std::string(hhmm) + "'");
  int h = 0, m = 0;
  for (std::size_t i = 0; i < hhmm.size(); ++i) {
    if (i == colon) continue;
    char c = hhmm[i];
    if (c < '0' || c > '9')
      throw ParseError("bad time of day '" + std::string(hhmm) + "'");
    if (i < colon)
      h = h * 10 + (c - '0');
    else
      m = m * 10 + (c - '0');
  }
  if (h > 23 || m > 59)
    throw ParseError("time of day out of range '" + std::string(hhmm) + "'");
  return h * 60 + m;
}

inline std::string format_minute(int minute) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
  return buf;
}

// Inclusive departure-time window. begin > end means the empty window.
struct TimeWindow {
  int begin_minute = 0;
  int end_minute = 0;

  bool contains(int minute) const {
    return minute >= begin_minute && minute <= end_minute;
  }
  bool empty() const { return begin_minute > end_minute; }

  static TimeWindow full_day() { return {0, 23 * 60 + 59}; }

  std::string to_string() const {
    return format_minute(begin_minute) + "-" + format_minute(end_minute);
  }
  static TimeWindow parse(std::string_view text) {
    auto dash = text.find('-');
    if (dash == std::string_view::npos)
      throw ParseError("bad time window '" + std::string(text) + "'");
    return {parse_minute(text.substr(0, dash)),
            parse_minute(text.substr(dash + 1))};
  }

  bool operator==(const TimeWindow&) const = default;
};

// ---------------------------------------------------------------------------
// Strategies and time-period vocabulary
// ---------------------------------------------------------------------------

enum class Strategy { D1, D2 };

inline std::string_view strategy_name(Strategy s) {
  return s == Strategy::D1 ? "D1" : "D2";
}
inline std::optional<Strategy> strategy_from_name(std::string_view n) {
  if (n == "D1" || n == "d1") return Strategy::D1;
  if (n == "D2" || n == "d2") return Strategy::D2;
  return std::nullopt;
}

inline constexpr std::array<const char*, 3> kTimePeriods = {
    "MORNING", "AFTERNOON", "EVENING"};

// Expansion of a spoken time period into a concrete window. The two
// strategies use different widths (D1 narrows to three hours, D2 keeps a
// wider band); unknown values fall back to the full day.
inline TimeWindow window_for(Strategy strategy, std::string_view period) {
  if (strategy == Strategy::D1) {
    if (period == "MORNING") return {6 * 60, 9 * 60};
    if (period == "AFTERNOON") return {12 * 60, 15 * 60};
    if (period == "EVENING") return {18 * 60, 21 * 60};
  } else {
    if (period == "MORNING") return {6 * 60, 11 * 60};
    if (period == "AFTERNOON") return {12 * 60, 17 * 60};
    if (period == "EVENING") return {18 * 60, 23 * 60};
  }
  return TimeWindow::full_day();
}

// ---------------------------------------------------------------------------
// System dialogue acts
// ---------------------------------------------------------------------------

enum class ActType {
  Greet,
  AskSlot,
  ConfirmOne,
  ConfirmBunch,
  RequestRepeat,
  GiveAnswer,
  CantHelp,
  ReferOperator,
  Close,
};

inline std::string_view act_name(ActType a) {
  switch (a) {
    case ActType::Greet: return "GREET";
    case ActType::AskSlot: return "ASK_SLOT";
    case ActType::ConfirmOne: return "CONFIRM_ONE";
    case ActType::ConfirmBunch: return "CONFIRM_BUNCH";
    case ActType::RequestRepeat: return "REQUEST_REPEAT";
    case ActType::GiveAnswer: return "GIVE_ANSWER";
    case ActType::CantHelp: return "CANT_HELP";
    case ActType::ReferOperator: return "REFER_OPERATOR";
    case ActType::Close: return "CLOSE";
  }
  return "UNKNOWN";
}

inline std::optional<ActType> act_from_name(std::string_view n) {
  for (ActType a :
       {ActType::Greet, ActType::AskSlot, ActType::ConfirmOne,
        ActType::ConfirmBunch, ActType::RequestRepeat, ActType::GiveAnswer,
        ActType::CantHelp, ActType::ReferOperator, ActType::Close})
    if (act_name(a) == n) return a;
  return std::nullopt;
}

// Speech interaction modality the system selects for the next user reply.
enum class ChannelMode { Continuous, IsolatedWord, Spelling };

inline std::string_view channel_mode_name(ChannelMode m) {
  switch (m) {
    case ChannelMode::Continuous: return "CONTINUOUS";
    case ChannelMode::IsolatedWord: return "ISOLATED_WORD";
    case ChannelMode::Spelling: return "SPELLING";
  }
  return "UNKNOWN";
}
inline std::optional<ChannelMode> channel_mode_from_name(std::string_view n) {
  for (ChannelMode m : {ChannelMode::Continuous, ChannelMode::IsolatedWord,
                        ChannelMode::Spelling})
    if (channel_mode_name(m) == n) return m;
  return std::nullopt;
}

enum class OfferKind { None, Details, Another };

inline std::string_view offer_name(OfferKind o) {
  switch (o) {
    case OfferKind::None: return "NONE";
    case OfferKind::Details: return "DETAILS";
    case OfferKind::Another: return "ANOTHER";
  }
  return "NONE";
}
inline std::optional<OfferKind> offer_from_name(std::string_view n) {
  if (n == "DETAILS") return OfferKind::Details;
  if (n == "ANOTHER") return OfferKind::Another;
  if (n == "NONE") return OfferKind::None;
  return std::nullopt;
}

// Payload of a GIVE_ANSWER act.
struct TrainAnswer {
  bool found = false;
  std::string train_id;
  std::string train_type;
  std::string dep_city;
  std::string arr_city;
  std::string dep_station;
  std::string arr_station;
  int dep_minute = 0;
  int arr_minute = 0;
  bool overnight = false;
  // Whether the answer wording states the train type (D2 answers do).
  bool type_spoken = false;

  bool operator==(const TrainAnswer&) const = default;
};

struct SystemAct {
  ActType type = ActType::Greet;
  std::optional<Slot> slot;           // ASK_SLOT target
  std::vector<Concept> items;         // concepts a CONFIRM_* act puts up
  std::vector<Concept> embedded;      // concepts implicitly confirmed by an
                                      // initiative question (D2)
  std::optional<TimeWindow> window;   // expansion used when confirming a time
  ChannelMode listen_mode = ChannelMode::Continuous;
  std::optional<TrainAnswer> answer;  // GIVE_ANSWER payload
  std::vector<Concept> answered;      // detail queries answered by this act
  OfferKind offer = OfferKind::None;

  bool operator==(const SystemAct&) const = default;
};

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

enum class CaTag { None, AP, IA, AM };
enum class Correction { Normal, Stc, Utc };
enum class FrameClass { None, Correct, Partial, TotalFailure };
enum class AnnotationSource { Auto, Manual };

inline std::string_view ca_tag_name(CaTag t) {
  switch (t) {
    case CaTag::None: return "NONE";
    case CaTag::AP: return "AP";
    case CaTag::IA: return "IA";
    case CaTag::AM: return "AM";
  }
  return "NONE";
}
inline std::optional<CaTag> ca_tag_from_name(std::string_view n) {
  for (CaTag t : {CaTag::None, CaTag::AP, CaTag::IA, CaTag::AM})
    if (ca_tag_name(t) == n) return t;
  return std::nullopt;
}

inline std::string_view correction_name(Correction c) {
  switch (c) {
    case Correction::Normal: return "NORMAL";
    case Correction::Stc: return "STC";
    case Correction::Utc: return "UTC";
  }
  return "NORMAL";
}
inline std::optional<Correction> correction_from_name(std::string_view n) {
  for (Correction c : {Correction::Normal, Correction::Stc, Correction::Utc})
    if (correction_name(c) == n) return c;
  return std::nullopt;
}

inline std::string_view frame_class_name(FrameClass f) {
  switch (f) {
    case FrameClass::None: return "NONE";
    case FrameClass::Correct: return "CORRECT";
    case FrameClass::Partial: return "PARTIAL";
    case FrameClass::TotalFailure: return "TOTAL_FAILURE";
  }
  return "NONE";
}
inline std::optional<FrameClass> frame_class_from_name(std::string_view n) {
  for (FrameClass f : {FrameClass::None, FrameClass::Correct,
                       FrameClass::Partial, FrameClass::TotalFailure})
    if (frame_class_name(f) == n) return f;
  return std::nullopt;
}

struct AnnotationRecord {
  CaTag ca_tag = CaTag::None;               // system turns
  Correction correction = Correction::Normal;
  FrameClass frame_class = FrameClass::None;  // user turns
  std::optional<bool> recovered;              // user turns, PARTIAL class only
  AnnotationSource source = AnnotationSource::Auto;
  std::vector<std::string> manual_fields;     // per-field provenance

  bool annotated() const {
    return ca_tag != CaTag::None || frame_class != FrameClass::None ||
           correction != Correction::Normal || recovered.has_value();
  }

  bool operator==(const AnnotationRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Turns, dialogues, scenarios, corpora
// ---------------------------------------------------------------------------

enum class Speaker { User, System };

inline std::string_view speaker_name(Speaker s) {
  return s == Speaker::User ? "USER" : "SYSTEM";
}
inline std::optional<Speaker> speaker_from_name(std::string_view n) {
  if (n == "USER") return Speaker::User;
  if (n == "SYSTEM") return Speaker::System;
  return std::nullopt;
}

struct Turn {
  int index = 0;
  Speaker speaker = Speaker::User;
  std::vector<std::string> words;      // spoken (reference) realization
  std::vector<std::string> hyp_words;  // decoded realization (user turns)
  std::optional<SemanticFrame> ref_frame;  // user turns: intended meaning
  std::optional<SemanticFrame> hyp_frame;  // user turns: post-channel output
  std::optional<SystemAct> system_act;     // system turns
  AnnotationRecord annotations;
  int duration_ds = 0;  // synthetic clock, tenths of a second

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::string scenario_id;
  Strategy strategy = Strategy::D1;
  std::uint64_t seed = 0;
  bool transaction_success = false;
  int synthetic_duration_ds = 0;
  std::vector<Turn> turns;

  double synthetic_duration_s() const { return synthetic_duration_ds / 10.0; }

  bool operator==(const Dialogue&) const = default;
};

// Task attribute labels used by Scenario.required_attributes.
namespace attr {
inline constexpr const char* kTimes = "times";
inline constexpr const char* kTrainType = "train-type";
inline constexpr const char* kRestaurant = "restaurant";
inline constexpr const char* kSleepingCar = "sleeping-car";
inline constexpr const char* kReservation = "reservation";
inline constexpr const char* kCost = "cost";
}  // namespace attr

inline constexpr std::array<const char*, 3> kServiceNames = {
    "RESTAURANT", "SLEEPING_CAR", "RESERVATION"};

struct Scenario {
  std::string id;
  std::string departure_city;
  std::string arrival_city;
  std::set<std::string> required_attributes;
  std::set<std::string> optional_attributes;
  // "free" or one of the period names; "free" lets the simulated user pick.
  std::string departure_time_preference = "free";

  bool operator==(const Scenario&) const = default;
};

using ScenarioSet = std::map<std::string, Scenario>;

inline ScenarioSet make_scenario_set(const std::vector<Scenario>& scenarios) {
  ScenarioSet out;
  for (const auto& s : scenarios) {
    if (!out.emplace(s.id, s).second)
      throw ValidationError("duplicate scenario id '" + s.id + "'");
  }
  return out;
}

struct CorpusMeta {
  std::string trial_label;
  std::string config_digest;
  std::string annotation_rules;  // rule-set version used by the annotator

  bool empty() const {
    return trial_label.empty() && config_digest.empty() &&
           annotation_rules.empty();
  }
  bool operator==(const CorpusMeta&) const = default;
};

struct Corpus {
  CorpusMeta metadata;
  std::vector<Dialogue> dialogues;

  bool operator==(const Corpus&) const = default;
};

}  // namespace dialeval
