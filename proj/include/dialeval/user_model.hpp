// Scenario-driven simulated user. Cooperativeness in [0,1] governs three
// behaviours: compliance with yes/no (and isolated-word) instructions,
// verbosity (extra concepts volunteered per utterance), and repeat versus
// rephrase after a repetition request. The user answers truthfully against
// the scenario, denies confirmations of wrong values, carries corrections
// in full-sentence denials when non-compliant, and asks the scenario's
// required detail attributes once the route answer has been given.
//
// Word realization is a pure function of (system act, frame, style) so the
// decoded word string of a corrupted frame can be produced with the same
// template as the spoken one.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialeval/dialogue_manager.hpp"
#include "dialeval/rng.hpp"
#include "dialeval/types.hpp"

namespace dialeval::sim {

struct UserStyle {
  bool compliant_isolated = false;  // bare reply honoring the listen mode
  bool rephrase = false;            // alternate wording of a repeat
};

// Compliance with yes/no and isolated-word instructions. Even barely
// cooperative callers mostly obey a direct "yes or no" prompt.
inline double comply_probability(double cooperativeness) {
  return 0.5 + 0.5 * cooperativeness;
}

struct UserState {
  Scenario scenario;
  double cooperativeness = 1.0;
  std::string time_pref;                    // resolved period
  std::vector<std::string> details_wanted;  // detail attributes still to ask
  std::set<Slot> conveyed;                  // slots uttered at least once
  std::optional<SemanticFrame> last_intent;
  std::optional<SystemAct> last_context;    // act the last intent replied to
  UserStyle last_style;
  bool finished = false;  // goals met or given up; only goodbyes from here
};

struct UserStep {
  UserState state;
  SemanticFrame intent;
  SystemAct realize_act;  // act context the words are realized against
  UserStyle style;
};

namespace user_detail {

// Canonical order in which detail attributes get asked.
inline const std::vector<std::string>& detail_order() {
  static const std::vector<std::string> order = {
      attr::kTrainType, attr::kRestaurant, attr::kSleepingCar,
      attr::kReservation, attr::kCost};
  return order;
}

inline Concept detail_concept(const std::string& attribute) {
  if (attribute == attr::kTrainType)
    return {Slot::TrainType, kQueryValue};
  if (attribute == attr::kCost)
    return {Slot::CostOfTicketQuery, kQueryValue};
  if (attribute == attr::kRestaurant)
    return {Slot::ServiceQuery, "RESTAURANT"};
  if (attribute == attr::kSleepingCar)
    return {Slot::ServiceQuery, "SLEEPING_CAR"};
  return {Slot::ServiceQuery, "RESERVATION"};
}

inline std::string truth_for(const UserState& u, Slot slot) {
  switch (slot) {
    case Slot::DepartureCity: return u.scenario.departure_city;
    case Slot::ArrivalCity: return u.scenario.arrival_city;
    case Slot::DepartureTime: return u.time_pref;
    default: return "";
  }
}

// The caller's own notion of the day parts, used to judge answers.
inline bool period_contains(std::string_view period, int minute) {
  if (period == "MORNING") return minute >= 5 * 60 && minute < 12 * 60;
  if (period == "AFTERNOON") return minute >= 12 * 60 && minute < 18 * 60;
  if (period == "EVENING") return minute >= 18 * 60;
  return true;
}

}  // namespace user_detail

inline UserState make_user(const Scenario& scenario, double cooperativeness,
                           SplitMix64& rng) {
  using namespace user_detail;
  UserState u;
  u.scenario = scenario;
  u.cooperativeness = cooperativeness;
  if (scenario.departure_time_preference == "free")
    u.time_pref = kTimePeriods[rng.uniform_index(kTimePeriods.size())];
  else
    u.time_pref = scenario.departure_time_preference;
  for (const auto& a : detail_order()) {
    if (scenario.required_attributes.count(a))
      u.details_wanted.push_back(a);
    else if (scenario.optional_attributes.count(a) &&
             rng.bernoulli(0.3 * (1.0 - cooperativeness)))
      u.details_wanted.push_back(a);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Word realization
// ---------------------------------------------------------------------------

inline std::vector<std::string> user_realize(const SystemAct& act,
                                             const SemanticFrame& frame,
                                             const UserStyle& style) {
  using words_detail::append_text;
  using words_detail::append_value_words;
  std::vector<std::string> w;
  if (frame.empty()) return w;

  const auto conf = frame.value(Slot::Confirmation);
  const auto dep = frame.value(Slot::DepartureCity);
  const auto arr = frame.value(Slot::ArrivalCity);
  const auto time = frame.value(Slot::DepartureTime);

  auto append_route_phrases = [&](bool with_subject) {
    if (with_subject) append_text(w, "i want to");
    if (dep && arr) {
      append_text(w, with_subject ? "go from" : "from");
      append_value_words(w, *dep);
      append_text(w, "to");
      append_value_words(w, *arr);
    } else if (dep) {
      append_text(w, with_subject ? "leave from" : "from");
      append_value_words(w, *dep);
    } else if (arr) {
      append_text(w, with_subject ? "go to" : "to");
      append_value_words(w, *arr);
    } else if (time && with_subject) {
      append_text(w, "travel");
    }
    if (time) {
      append_text(w, "in the");
      append_value_words(w, *time);
    }
  };

  auto append_queries = [&]() {
    bool first = w.empty();
    auto joiner = [&]() {
      if (!first) append_text(w, "and");
      first = false;
    };
    if (auto v = frame.value(Slot::TrainType)) {
      joiner();
      if (*v == kQueryValue)
        append_text(w, "what kind of train is it");
      else {
        append_text(w, "is that an");
        append_value_words(w, *v);
        append_text(w, "train");
      }
    }
    if (auto v = frame.value(Slot::ServiceQuery)) {
      joiner();
      if (*v == "RESTAURANT")
        append_text(w, "is there a restaurant car");
      else if (*v == "SLEEPING_CAR")
        append_text(w, "are there sleeping cars");
      else
        append_text(w, "do i need a reservation");
    }
    if (frame.has(Slot::CostOfTicketQuery)) {
      joiner();
      append_text(w, "how much does the ticket cost");
    }
    if (frame.has(Slot::MoreInfoQuery)) {
      joiner();
      append_text(w, "tell me more about it");
    }
  };

  // Confirmation-led replies.
  if (conf) {
    if (style.compliant_isolated) {
      append_text(w, *conf == "YES" ? "yes" : "no");
      return w;
    }
    append_text(w, *conf == "YES" ? "yes" : "no");
    if (dep || arr || time) {
      append_text(w, "i want to");
      if (dep) {
        append_text(w, "leave from");
        append_value_words(w, *dep);
      }
      if (arr) {
        append_text(w, dep ? "and go to" : "go to");
        append_value_words(w, *arr);
      }
      if (time) {
        append_text(w, "in the");
        append_value_words(w, *time);
      }
    } else if (*conf == "YES") {
      append_text(w, "i do");
    }
    append_queries();
    return w;
  }

  // Bare isolated-word replies: the values alone.
  if (style.compliant_isolated) {
    for (const auto& [slot, value] : frame.concepts())
      if (slot != Slot::Confirmation) append_value_words(w, value);
    return w;
  }

  // Detail questions without route content.
  if (!dep && !arr && !time) {
    append_queries();
    return w;
  }

  if (style.rephrase) {
    append_text(w, "i said");
    append_route_phrases(false);
  } else {
    append_route_phrases(true);
  }
  append_queries();
  return w;
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

namespace user_detail {

inline UserStep make_step(UserState u, SemanticFrame intent,
                          const SystemAct& context, UserStyle style) {
  for (const auto& [slot, value] : intent.concepts())
    if (slot != Slot::Confirmation) u.conveyed.insert(slot);
  u.last_intent = intent;
  u.last_context = context;
  u.last_style = style;
  return {std::move(u), std::move(intent), context, style};
}

// Ask the next wanted detail attributes (at most two, distinct slots).
inline SemanticFrame take_detail_queries(UserState& u, SplitMix64& rng) {
  SemanticFrame frame;
  if (u.details_wanted.empty()) return frame;
  Concept first = detail_concept(u.details_wanted.front());
  u.details_wanted.erase(u.details_wanted.begin());
  frame.set(first.slot, first.value);
  if (!u.details_wanted.empty() && rng.bernoulli(0.5)) {
    Concept second = detail_concept(u.details_wanted.front());
    if (!frame.has(second.slot)) {
      u.details_wanted.erase(u.details_wanted.begin());
      frame.set(second.slot, second.value);
    }
  }
  return frame;
}

}  // namespace user_detail

inline UserStep user_step(UserState u, const SystemAct& act, SplitMix64& rng) {
  using namespace user_detail;
  if (act.type == ActType::ReferOperator || act.type == ActType::Close)
    throw Error("user_step on a terminal system act");

  // Once the task is over the user only wants to hang up, whatever the
  // system asks next.
  if (u.finished) {
    SemanticFrame f;
    f.set(Slot::Confirmation, "NO");
    UserStyle style;
    style.compliant_isolated =
        act.listen_mode != ChannelMode::Continuous &&
        rng.bernoulli(comply_probability(u.cooperativeness));
    return make_step(std::move(u), std::move(f), act, style);
  }

  switch (act.type) {
    case ActType::Greet: {
      SemanticFrame f;
      f.set(Slot::DepartureCity, truth_for(u, Slot::DepartureCity));
      f.set(Slot::ArrivalCity, truth_for(u, Slot::ArrivalCity));
      const double p_time = 0.4 + 0.4 * (1.0 - u.cooperativeness);
      if (rng.bernoulli(p_time))
        f.set(Slot::DepartureTime, u.time_pref);
      return make_step(std::move(u), std::move(f), act, UserStyle{});
    }

    case ActType::AskSlot: {
      // Check what the question presupposes (D2 embeds).
      std::vector<Concept> wrong;
      for (const auto& e : act.embedded)
        if (e.value != truth_for(u, e.slot)) wrong.push_back(e);
      if (!wrong.empty()) {
        SemanticFrame f;
        f.set(Slot::Confirmation, "NO");
        for (const auto& e : wrong) f.set(e.slot, truth_for(u, e.slot));
        if (act.slot && rng.bernoulli(0.8))
          f.set(*act.slot, truth_for(u, *act.slot));
        return make_step(std::move(u), std::move(f), act, UserStyle{});
      }
      SemanticFrame f;
      f.set(*act.slot, truth_for(u, *act.slot));
      UserStyle style;
      if (act.listen_mode != ChannelMode::Continuous &&
          rng.bernoulli(comply_probability(u.cooperativeness))) {
        style.compliant_isolated = true;
        return make_step(std::move(u), std::move(f), act, style);
      }
      if (rng.bernoulli(0.8 * (1.0 - u.cooperativeness))) {
        // Volunteer one extra concept, preferring something not yet said.
        std::vector<Slot> candidates;
        for (Slot s : {Slot::DepartureTime, Slot::ArrivalCity,
                       Slot::DepartureCity})
          if (s != *act.slot) candidates.push_back(s);
        Slot extra = candidates.front();
        for (Slot s : candidates)
          if (!u.conveyed.count(s)) {
            extra = s;
            break;
          }
        f.set(extra, truth_for(u, extra));
      }
      return make_step(std::move(u), std::move(f), act, style);
    }

    case ActType::ConfirmOne:
    case ActType::ConfirmBunch: {
      bool all_match = true;
      std::vector<Concept> wrong;
      for (const auto& item : act.items) {
        if (item.value != truth_for(u, item.slot)) {
          all_match = false;
          wrong.push_back(item);
        }
      }
      SemanticFrame f;
      f.set(Slot::Confirmation, all_match ? "YES" : "NO");
      UserStyle style;
      const bool comply = rng.bernoulli(comply_probability(u.cooperativeness));
      if (comply) {
        style.compliant_isolated = true;
      } else if (!all_match) {
        // Full-sentence denial carrying the corrections.
        for (const auto& item : wrong)
          f.set(item.slot, truth_for(u, item.slot));
      }
      return make_step(std::move(u), std::move(f), act, style);
    }

    case ActType::RequestRepeat: {
      if (!u.last_intent) throw Error("repeat requested before any utterance");
      const SemanticFrame previous = *u.last_intent;
      const SystemAct context = u.last_context ? *u.last_context : act;
      UserStyle style = u.last_style;
      if (act.listen_mode != ChannelMode::Continuous &&
          rng.bernoulli(comply_probability(u.cooperativeness))) {
        // Isolated-word or spelled repeat: one concept at a time.
        SemanticFrame f;
        if (!previous.concepts().empty()) {
          const auto& [slot, value] = *previous.concepts().begin();
          f.set(slot, value);
        }
        style.compliant_isolated = true;
        style.rephrase = false;
        return make_step(std::move(u), std::move(f), context, style);
      }
      if (!rng.bernoulli(0.4 + 0.6 * u.cooperativeness))
        style.rephrase = true;  // low cooperation rephrases instead
      return make_step(std::move(u), previous, context, style);
    }

    case ActType::GiveAnswer:
    case ActType::CantHelp: {
      if (act.type == ActType::GiveAnswer && act.answer &&
          act.answer->found && act.answered.empty()) {
        // A route answer that contradicts the task gets objected to with
        // the corrections spelled out.
        SemanticFrame protest;
        if (act.answer->dep_city != truth_for(u, Slot::DepartureCity))
          protest.set(Slot::DepartureCity, truth_for(u, Slot::DepartureCity));
        if (act.answer->arr_city != truth_for(u, Slot::ArrivalCity))
          protest.set(Slot::ArrivalCity, truth_for(u, Slot::ArrivalCity));
        if (!period_contains(u.time_pref, act.answer->dep_minute))
          protest.set(Slot::DepartureTime, u.time_pref);
        if (!protest.empty()) {
          protest.set(Slot::Confirmation, "NO");
          return make_step(std::move(u), std::move(protest), act,
                           UserStyle{});
        }
      }
      if (act.type == ActType::CantHelp) {
        // No service information from this system; drop those goals.
        u.details_wanted.clear();
        if (act.offer != OfferKind::Another && u.last_intent) {
          // The brush-off arrived before any answer (the system reacted to
          // a query the user never made): restate the pending utterance.
          const SemanticFrame previous = *u.last_intent;
          const SystemAct context = u.last_context ? *u.last_context : act;
          return make_step(std::move(u), previous, context, u.last_style);
        }
      }
      if (act.answer && act.answer->found && act.answer->type_spoken) {
        // The answer wording already names the train type.
        std::erase(u.details_wanted, attr::kTrainType);
      }
      if (act.answer && !act.answer->found) {
        SemanticFrame f;
        f.set(Slot::Confirmation, "NO");
        u.finished = true;
        UserStyle style;
        style.compliant_isolated =
            act.listen_mode != ChannelMode::Continuous &&
            rng.bernoulli(comply_probability(u.cooperativeness));
        return make_step(std::move(u), std::move(f), act, style);
      }
      SemanticFrame f = take_detail_queries(u, rng);
      UserStyle style;
      if (f.empty()) {
        f.set(Slot::Confirmation, "NO");
        u.finished = true;
        // Declining the offer is a bare isolated word when complying.
        style.compliant_isolated =
            act.listen_mode != ChannelMode::Continuous &&
            rng.bernoulli(comply_probability(u.cooperativeness));
      }
      return make_step(std::move(u), std::move(f), act, style);
    }

    default:
      throw Error("user_step: unhandled act");
  }
}

}  // namespace dialeval::sim
