// Concept-level error channel standing in for the acoustic front end and
// the robust parser. A reference frame passes through the channel and may
// come out with deleted concepts, substituted values (drawn from per-slot
// confusion sets), one inserted query concept, or as the empty frame
// (total understanding failure).
//
// Draw order is fixed and documented so corpora are reproducible:
//   1. one uniform for total failure,
//   2. one uniform per concept in slot order (delete / substitute bands,
//      plus one uniform for the substitute value when that band is hit),
//   3. one uniform for insertion (plus slot and value picks when hit).
//
// All probabilities are scaled by the mode factor: 1 in continuous mode,
// isolated_word_factor in isolated-word mode, spelling_factor in spelling
// mode.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dialeval/rng.hpp"
#include "dialeval/timetable.hpp"
#include "dialeval/types.hpp"

namespace dialeval::sim {

struct ErrorModel {
  double p_sub = 0.0;   // per-concept value substitution
  double p_del = 0.0;   // per-concept deletion
  double p_ins = 0.0;   // per-utterance insertion of one extra concept
  double p_fail = 0.0;  // per-utterance total failure (empty frame)
  double isolated_word_factor = 0.25;
  double spelling_factor = 0.1;
  std::map<Slot, std::vector<std::string>> confusions;

  double mode_factor(ChannelMode mode) const {
    switch (mode) {
      case ChannelMode::Continuous: return 1.0;
      case ChannelMode::IsolatedWord: return isolated_word_factor;
      case ChannelMode::Spelling: return spelling_factor;
    }
    return 1.0;
  }

  void validate() const {
    for (double p : {p_sub, p_del, p_ins, p_fail, isolated_word_factor,
                     spelling_factor})
      if (p < 0.0 || p > 1.0)
        throw Error("error model probabilities and factors must be in [0,1]");
    if (p_sub + p_del > 1.0)
      throw Error("p_sub + p_del must not exceed 1");
  }

  // The identity channel.
  static ErrorModel off() { return ErrorModel{}; }

  // Populate the per-slot confusion sets from the domain vocabulary. City
  // names confuse with city names and time expressions with each other;
  // the yes/no words, service names and train types are phonetically
  // distinct enough that they may be lost but not swapped. A custom model
  // can still declare any slot confusable.
  void fill_confusions(const TimetableDB& db) {
    std::vector<std::string> cities(db.cities().begin(), db.cities().end());
    confusions[Slot::DepartureCity] = cities;
    confusions[Slot::ArrivalCity] = cities;
    confusions[Slot::DepartureTime] = {kTimePeriods.begin(),
                                       kTimePeriods.end()};
    confusions[Slot::ArrivalTime] = {kTimePeriods.begin(), kTimePeriods.end()};
  }

  // Channel rates frozen after bisecting the error level until the
  // simulated corpus sits at the reported operating point (sentence
  // understanding between 50 and 60 percent, pooled over both
  // strategies).
  static ErrorModel defaults(const TimetableDB& db) {
    ErrorModel m;
    m.p_sub = 0.32;
    m.p_del = 0.16;
    m.p_ins = 0.20;
    m.p_fail = 0.05;
    m.isolated_word_factor = 0.25;
    m.spelling_factor = 0.1;
    m.fill_confusions(db);
    return m;
  }
};

namespace channel_detail {

// Slots eligible to receive an inserted phantom concept: hallucinated
// query markers (the cost-of-ticket case) and hallucinated route values.
inline const std::vector<Slot>& insertion_slots() {
  static const std::vector<Slot> slots = {
      Slot::CostOfTicketQuery, Slot::MoreInfoQuery,  Slot::ServiceQuery,
      Slot::DepartureCity,     Slot::ArrivalCity,    Slot::DepartureTime};
  return slots;
}

inline std::optional<std::string> insertion_value(Slot slot,
                                                  const ErrorModel& model,
                                                  SplitMix64& rng) {
  if (slot == Slot::CostOfTicketQuery || slot == Slot::MoreInfoQuery)
    return kQueryValue;
  if (slot == Slot::ServiceQuery)
    return kServiceNames[rng.uniform_index(kServiceNames.size())];
  auto it = model.confusions.find(slot);
  if (it == model.confusions.end() || it->second.empty())
    return std::nullopt;  // no vocabulary to hallucinate from
  return it->second[rng.uniform_index(it->second.size())];
}

}  // namespace channel_detail

inline SemanticFrame corrupt_frame(const SemanticFrame& ref,
                                   const ErrorModel& model, ChannelMode mode,
                                   SplitMix64& rng) {
  const double f = model.mode_factor(mode);

  if (rng.next_double() < model.p_fail * f) return SemanticFrame{};

  SemanticFrame out;
  for (const auto& [slot, value] : ref.concepts()) {
    const double u = rng.next_double();
    if (u < model.p_del * f) continue;  // concept deleted
    if (u < (model.p_del + model.p_sub) * f) {
      // Substitute the value from the slot's confusion set; slots without
      // confusable alternatives keep their value.
      auto it = model.confusions.find(slot);
      if (it != model.confusions.end()) {
        std::vector<std::string> candidates;
        for (const auto& v : it->second)
          if (v != value) candidates.push_back(v);
        if (!candidates.empty()) {
          out.set(slot, candidates[rng.uniform_index(candidates.size())]);
          continue;
        }
      }
    }
    out.set(slot, value);
  }

  if (rng.next_double() < model.p_ins * f) {
    // Phantom query markers are the typical insertion; hallucinated route
    // values happen too, less often. Draw the family first (one uniform),
    // then the slot, then the value.
    std::vector<Slot> queries, routes;
    for (Slot s : channel_detail::insertion_slots()) {
      if (out.has(s) || ref.has(s)) continue;
      if (s == Slot::DepartureCity || s == Slot::ArrivalCity ||
          s == Slot::DepartureTime)
        routes.push_back(s);
      else
        queries.push_back(s);
    }
    const std::vector<Slot>* family = nullptr;
    if (!queries.empty() && !routes.empty())
      family = rng.next_double() < 0.6 ? &queries : &routes;
    else if (!queries.empty())
      family = &queries;
    else if (!routes.empty())
      family = &routes;
    if (family) {
      Slot slot = (*family)[rng.uniform_index(family->size())];
      if (auto value = channel_detail::insertion_value(slot, model, rng))
        out.set(slot, *value);
    }
  }
  return out;
}

}  // namespace dialeval::sim
