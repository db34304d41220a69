// Shared builders for the test suites: scripted dialogue drives (fixed
// user frames and fixed channel outcomes against a real dialogue manager)
// and synthetic annotated corpora with exact tag counts.

#pragma once

#include <string>
#include <vector>

#include "dialeval/dialeval.hpp"

namespace testsup {

using namespace dialeval;

// One user exchange of a scripted dialogue: the intended frame and what
// the channel made of it.
struct ScriptedExchange {
  SemanticFrame ref;
  SemanticFrame hyp;
};

// Drive a dialogue manager with fixed user frames. The dialogue ends when
// the manager closes or the script runs out. With respond_to_last the
// system's reaction to the final scripted turn is kept; without it the
// dialogue is cut as an excerpt right after the last user turn (the long
// D1 exemplar ends on a user turn).
inline Dialogue run_scripted(Strategy strategy, const Scenario& scenario,
                             const std::vector<ScriptedExchange>& script,
                             const sim::TimetableDB& db,
                             const sim::SimConfig& config = {},
                             bool respond_to_last = true) {
  sim::DmState dm = sim::make_dm_state(strategy, config.dm);
  Dialogue d;
  d.id = "scripted-" + scenario.id;
  d.scenario_id = scenario.id;
  d.strategy = strategy;

  SemanticFrame last_hyp;
  std::size_t cursor = 0;
  while (true) {
    if (cursor >= script.size() && !respond_to_last) break;
    sim::DmStep step = sim::dm_step(std::move(dm), last_hyp, db);
    dm = std::move(step.state);
    Turn st;
    st.index = static_cast<int>(d.turns.size());
    st.speaker = Speaker::System;
    st.words = step.words;
    st.system_act = step.act;
    st.duration_ds = config.clock.turn_ds(st.words.size());
    d.turns.push_back(std::move(st));
    if (dm.closed || cursor >= script.size()) break;

    const ScriptedExchange& x = script[cursor++];
    Turn ut;
    ut.index = static_cast<int>(d.turns.size());
    ut.speaker = Speaker::User;
    ut.words = sim::user_realize(step.act, x.ref, sim::UserStyle{});
    ut.hyp_words = sim::user_realize(step.act, x.hyp, sim::UserStyle{});
    ut.ref_frame = x.ref;
    ut.hyp_frame = x.hyp;
    ut.duration_ds = config.clock.turn_ds(ut.words.size());
    d.turns.push_back(std::move(ut));
    last_hyp = x.hyp;
  }
  int total = 0;
  for (const auto& t : d.turns) total += t.duration_ds;
  d.synthetic_duration_ds = total;
  d.transaction_success = annotate::derive_transaction_success(d, scenario);
  return d;
}

inline std::vector<ActType> system_acts(const Dialogue& d) {
  std::vector<ActType> acts;
  for (const auto& t : d.turns)
    if (t.system_act) acts.push_back(t.system_act->type);
  return acts;
}

// ---------------------------------------------------------------------------
// Scripted exemplar dialogues
// ---------------------------------------------------------------------------

inline Scenario recovery_scenario() {
  Scenario s;
  s.id = "s03";
  s.departure_city = "ROMA";
  s.arrival_city = "MILANO";
  s.required_attributes = {attr::kTimes};
  s.departure_time_preference = "MORNING";
  return s;
}

inline std::vector<ScriptedExchange> recovery_script() {
  SemanticFrame u1_ref{{Slot::DepartureCity, "ROMA"},
                       {Slot::ArrivalCity, "MILANO"},
                       {Slot::DepartureTime, "MORNING"}};
  SemanticFrame u1_hyp{{Slot::ArrivalCity, "MILANO"},
                       {Slot::DepartureTime, "MORNING"}};
  SemanticFrame u2_ref{{Slot::DepartureCity, "ROMA"}};
  SemanticFrame u2_hyp{{Slot::DepartureCity, "ROMA"},
                       {Slot::CostOfTicketQuery, kQueryValue}};
  return {{u1_ref, u1_hyp}, {u2_ref, u2_hyp}};
}

inline Scenario d1_exemplar_scenario() {
  Scenario s;
  s.id = "s01";
  s.departure_city = "TORINO";
  s.arrival_city = "MILANO";
  s.required_attributes = {attr::kTimes};
  s.departure_time_preference = "EVENING";
  return s;
}

inline std::vector<ScriptedExchange> d1_exemplar_script() {
  auto same = [](SemanticFrame f) { return ScriptedExchange{f, f}; };
  SemanticFrame yes{{Slot::Confirmation, "YES"}};
  SemanticFrame no{{Slot::Confirmation, "NO"}};
  SemanticFrame u1_ref{{Slot::DepartureCity, "TORINO"},
                       {Slot::ArrivalCity, "MILANO"}};
  SemanticFrame u1_hyp{{Slot::DepartureCity, "TRENTO"},
                       {Slot::ArrivalCity, "MILANO"}};
  return {
      {u1_ref, u1_hyp},                                        // U1
      same(no),                                                // U2
      same(no),                                                // U3
      same(SemanticFrame{{Slot::DepartureCity, "TORINO"}}),    // U4
      same(yes),                                               // U5
      same(yes),                                               // U6
      same(SemanticFrame{{Slot::DepartureTime, "EVENING"}}),   // U7
      same(yes),                                               // U8
      same(SemanticFrame{{Slot::TrainType, kQueryValue},
                         {Slot::CostOfTicketQuery, kQueryValue}}),  // U9
  };
}

inline Scenario d2_exemplar_scenario() {
  Scenario s;
  s.id = "s02";
  s.departure_city = "MILANO";
  s.arrival_city = "ROMA";
  s.required_attributes = {attr::kTimes};
  s.departure_time_preference = "EVENING";
  return s;
}

inline std::vector<ScriptedExchange> d2_exemplar_script() {
  SemanticFrame u1_ref{{Slot::DepartureCity, "MILANO"},
                       {Slot::ArrivalCity, "ROMA"}};
  SemanticFrame u1_hyp{{Slot::DepartureCity, "MERANO"},
                       {Slot::ArrivalCity, "ROMA"}};
  SemanticFrame u2{{Slot::Confirmation, "NO"},
                   {Slot::DepartureCity, "MILANO"},
                   {Slot::DepartureTime, "EVENING"}};
  SemanticFrame yes{{Slot::Confirmation, "YES"}};
  SemanticFrame no{{Slot::Confirmation, "NO"}};
  return {{u1_ref, u1_hyp}, {u2, u2}, {yes, yes}, {no, no}};
}

// ---------------------------------------------------------------------------
// Synthetic corpora with exact annotation counts
// ---------------------------------------------------------------------------

inline SemanticFrame frame_for_class(FrameClass c, bool ref_side) {
  switch (c) {
    case FrameClass::Correct:
      return SemanticFrame{{Slot::DepartureCity, "ROMA"}};
    case FrameClass::Partial:
      return ref_side ? SemanticFrame{{Slot::DepartureCity, "ROMA"},
                                      {Slot::ArrivalCity, "MILANO"}}
                      : SemanticFrame{{Slot::ArrivalCity, "MILANO"}};
    case FrameClass::TotalFailure:
      return ref_side ? SemanticFrame{{Slot::DepartureCity, "ROMA"}}
                      : SemanticFrame{};
    default:
      return SemanticFrame{};
  }
}

struct UserTurnSpec {
  FrameClass frame_class = FrameClass::Correct;
  std::optional<bool> recovered;
  Correction correction = Correction::Normal;
};

struct SystemTurnSpec {
  CaTag ca_tag = CaTag::AP;
  Correction correction = Correction::Normal;
};

// Build a dialogue alternating SYSTEM/USER from the two spec lists
// (user turn k follows system turn k; a trailing system turn closes).
inline Dialogue synthetic_dialogue(const std::string& id, Strategy strategy,
                                   const std::vector<SystemTurnSpec>& sys,
                                   const std::vector<UserTurnSpec>& users,
                                   bool transaction_success) {
  if (sys.size() != users.size() && sys.size() != users.size() + 1)
    throw Error("synthetic_dialogue: bad spec sizes");
  Dialogue d;
  d.id = id;
  d.scenario_id = "s01";
  d.strategy = strategy;
  d.transaction_success = transaction_success;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    Turn st;
    st.index = static_cast<int>(d.turns.size());
    st.speaker = Speaker::System;
    st.words = {"question"};
    SystemAct act;
    act.type = ActType::AskSlot;
    act.slot = Slot::DepartureCity;
    st.system_act = act;
    st.annotations.ca_tag = sys[k].ca_tag;
    st.annotations.correction = sys[k].correction;
    d.turns.push_back(std::move(st));
    if (k >= users.size()) break;
    Turn ut;
    ut.index = static_cast<int>(d.turns.size());
    ut.speaker = Speaker::User;
    ut.words = {"answer"};
    ut.hyp_words = {"answer"};
    ut.ref_frame = frame_for_class(users[k].frame_class, true);
    ut.hyp_frame = frame_for_class(users[k].frame_class, false);
    ut.annotations.frame_class = users[k].frame_class;
    ut.annotations.recovered = users[k].recovered;
    ut.annotations.correction = users[k].correction;
    d.turns.push_back(std::move(ut));
  }
  return d;
}

}  // namespace testsup
