// The two dialogue management strategies.
//
// D1 collects the route and the departure time under focused expectations
// (concepts outside the expected slots are silently discarded), confirms
// every newly heard concept explicitly — as a bunch first, concept by
// concept once a bunch is denied — forces yes/no replies into isolated-word
// mode, answers one route per call and then serves train-service detail
// queries. Repeated total failures escalate the interaction mode to
// isolated-word and then spelling.
//
// D2 keeps a wide interpretation focus, embeds newly heard concepts into
// the next initiative question (absence of denial confirms them
// implicitly), confirms explicitly only after a denial or when nothing is
// left to ask, serves any number of routes but no service information, and
// after three repetition requests — the last one in spelling mode — refers
// the caller to a human operator.
//
// Both step functions are pure: state in, state out, no hidden globals.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialeval/timetable.hpp"
#include "dialeval/types.hpp"

namespace dialeval::sim {

enum class SlotStatus { Empty, Heard, Confirmed };

struct SlotEntry {
  std::string value;
  SlotStatus status = SlotStatus::Empty;

  bool operator==(const SlotEntry&) const = default;
};

enum class DmPhase { Start, Acquire, ConfirmBunch, ConfirmOne, Details, Answered, Done };

struct DmConfig {
  // Consecutive total failures before D1 switches to isolated-word mode;
  // twice as many switch it to spelling mode.
  int d1_mode_switch_after = 2;
  int turn_cap = 60;

  bool operator==(const DmConfig&) const = default;
};

inline constexpr std::array<Slot, 3> kRequiredSlots = {
    Slot::DepartureCity, Slot::ArrivalCity, Slot::DepartureTime};

struct DmState {
  Strategy strategy = Strategy::D1;
  DmPhase phase = DmPhase::Start;
  std::map<Slot, SlotEntry> store;
  std::set<Slot> expected_slots;
  ChannelMode channel_mode = ChannelMode::Continuous;  // D1 escalation level
  ChannelMode current_listen = ChannelMode::Continuous;
  int repeat_count = 0;           // consecutive total failures
  bool per_concept_confirm = false;
  std::vector<Concept> pending_confirm;  // items of the outstanding confirm
  std::vector<Concept> embedded_pending;  // D2: embeds of the last initiative
  std::optional<SystemAct> last_act;
  std::optional<TrainAnswer> answer;
  std::optional<TrainRecord> answer_train;
  int routes_served = 0;
  bool closed = false;
  DmConfig config;
};

inline DmState make_dm_state(Strategy strategy, DmConfig config = {}) {
  DmState s;
  s.strategy = strategy;
  s.config = config;
  for (Slot slot : kRequiredSlots) s.store[slot] = SlotEntry{};
  return s;
}

struct DmStep {
  DmState state;
  SystemAct act;
  std::vector<std::string> words;
};

// ---------------------------------------------------------------------------
// Word realization
// ---------------------------------------------------------------------------

namespace words_detail {

inline void append_value_words(std::vector<std::string>& out,
                               std::string_view value) {
  std::string token;
  for (char c : value) {
    if (c == '_' || c == ' ') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!token.empty()) out.push_back(token);
}

inline void append_text(std::vector<std::string>& out, std::string_view text) {
  std::string token;
  for (char c : text) {
    if (c == ' ') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(token);
}

inline void append_embed_phrase(std::vector<std::string>& out,
                                const Concept& c) {
  switch (c.slot) {
    case Slot::DepartureCity:
      append_text(out, "from");
      append_value_words(out, c.value);
      break;
    case Slot::ArrivalCity:
      append_text(out, "to");
      append_value_words(out, c.value);
      break;
    case Slot::DepartureTime:
      append_text(out, "in the");
      append_value_words(out, c.value);
      break;
    default:
      break;
  }
}

}  // namespace words_detail

inline std::vector<std::string> render_system_words(
    Strategy strategy, const SystemAct& act,
    const std::optional<TrainRecord>& train) {
  using namespace words_detail;
  std::vector<std::string> w;
  switch (act.type) {
    case ActType::Greet:
      append_text(w,
                  "hello this is train enquiry service please speak after "
                  "the tone which information do you need");
      break;
    case ActType::AskSlot: {
      switch (*act.slot) {
        case Slot::DepartureCity:
          append_text(w, "where do you want to leave from");
          break;
        case Slot::ArrivalCity:
          append_text(w, "where do you want to go");
          break;
        case Slot::DepartureTime:
          append_text(w, "at which time do you want to leave");
          break;
        default:
          append_text(w, "please go on");
          break;
      }
      for (const auto& e : act.embedded) append_embed_phrase(w, e);
      break;
    }
    case ActType::ConfirmOne: {
      const Concept& c = act.items.front();
      switch (c.slot) {
        case Slot::DepartureCity:
          append_text(w, "do you want to leave from");
          append_value_words(w, c.value);
          break;
        case Slot::ArrivalCity:
          append_text(w, "do you want to go to");
          append_value_words(w, c.value);
          break;
        case Slot::DepartureTime:
          append_text(w, "do you want to leave between");
          w.push_back(format_minute(act.window->begin_minute));
          append_text(w, "and");
          w.push_back(format_minute(act.window->end_minute));
          break;
        default:
          append_text(w, "please confirm");
          append_value_words(w, c.value);
          break;
      }
      append_text(w, strategy == Strategy::D1 ? "yes or no"
                                              : "please answer yes or no");
      break;
    }
    case ActType::ConfirmBunch: {
      append_text(w, "do you want to go");
      for (const auto& c : act.items) {
        if (c.slot == Slot::DepartureCity) {
          append_text(w, "from");
          append_value_words(w, c.value);
        } else if (c.slot == Slot::ArrivalCity) {
          append_text(w, "to");
          append_value_words(w, c.value);
        } else if (c.slot == Slot::DepartureTime) {
          append_text(w, "leaving in the");
          append_value_words(w, c.value);
        }
      }
      append_text(w, strategy == Strategy::D1 ? "yes or no"
                                              : "please answer yes or no");
      break;
    }
    case ActType::RequestRepeat:
      if (act.listen_mode == ChannelMode::Spelling)
        append_text(w, "sorry please spell your answer letter by letter");
      else if (act.listen_mode == ChannelMode::IsolatedWord)
        append_text(w, "sorry please repeat answering one word at a time");
      else
        append_text(w, "sorry please repeat your request");
      break;
    case ActType::GiveAnswer: {
      const TrainAnswer& a = *act.answer;
      if (!act.answered.empty()) {
        // Detail answer about the train already on the table.
        bool first = true;
        for (const auto& q : act.answered) {
          if (!first) append_text(w, "and");
          first = false;
          if (q.slot == Slot::TrainType) {
            append_text(w, "it is an");
            append_value_words(w, train ? train->type : a.train_type);
            append_text(w, "train");
          } else if (q.slot == Slot::CostOfTicketQuery) {
            append_text(w, "the ticket costs");
            w.push_back(std::to_string(train ? train->fare_eur : 0));
            append_text(w, "euro");
            if (train && train->extra_fare)
              append_text(w, "with an extra fare");
          } else if (q.slot == Slot::MoreInfoQuery) {
            append_text(w, "it is an");
            append_value_words(w, train ? train->type : a.train_type);
            append_text(w, "train");
            if (train && train->restaurant)
              append_text(w, "with a restaurant car");
            if (train && train->sleeping_car)
              append_text(w, "with sleeping cars");
            if (train && train->reservation)
              append_text(w, "and a reservation is required");
          } else if (q.slot == Slot::ServiceQuery) {
            if (q.value == "RESTAURANT")
              append_text(w, train && train->restaurant
                                 ? "the train has a restaurant car"
                                 : "the train has no restaurant car");
            else if (q.value == "SLEEPING_CAR")
              append_text(w, train && train->sleeping_car
                                 ? "there are sleeping cars"
                                 : "there are no sleeping cars");
            else
              append_text(w, train && train->reservation
                                 ? "a reservation is required"
                                 : "no reservation is needed");
          }
        }
        append_text(w, "do you need anything else");
      } else if (!a.found) {
        append_text(w, "i am sorry there is no train from");
        append_value_words(w, a.dep_city);
        append_text(w, "to");
        append_value_words(w, a.arr_city);
        append_text(w, "in that period");
      } else if (strategy == Strategy::D1) {
        append_text(w, "there is a train from");
        append_value_words(w, a.dep_station);
        append_text(w, "to");
        append_value_words(w, a.arr_station);
        append_text(w, "it leaves at");
        w.push_back(format_minute(a.dep_minute));
        append_text(w, "and arrives at");
        w.push_back(format_minute(a.arr_minute));
        append_text(w, "do you want more detailed information about it");
      } else {
        append_value_words(w, a.train_type);
        append_value_words(w, a.train_id);
        append_text(w, "leaves from");
        append_value_words(w, a.dep_station);
        append_text(w, "at");
        w.push_back(format_minute(a.dep_minute));
        append_text(w, "it arrives at");
        append_value_words(w, a.arr_station);
        append_text(w, "at");
        w.push_back(format_minute(a.arr_minute));
        append_text(w, "do you want another train information");
      }
      break;
    }
    case ActType::CantHelp:
      append_text(w,
                  "i am sorry i cannot give information about train services");
      if (act.offer == OfferKind::Another)
        append_text(w, "do you want another train information");
      break;
    case ActType::ReferOperator:
      append_text(w,
                  "i am sorry please call the human operator service goodbye");
      break;
    case ActType::Close:
      append_text(w, "good bye");
      break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace dm_detail {

inline ChannelMode strongest(ChannelMode a, ChannelMode b) {
  return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

inline SemanticFrame filter_expected(const SemanticFrame& input,
                                     const std::set<Slot>& expected) {
  SemanticFrame out;
  for (const auto& [slot, value] : input.concepts())
    if (expected.count(slot)) out.set(slot, value);
  return out;
}

inline void set_heard(DmState& s, Slot slot, const std::string& value) {
  auto& entry = s.store[slot];
  if (entry.status == SlotStatus::Confirmed && entry.value == value) return;
  entry = {value, SlotStatus::Heard};
}

inline std::vector<Concept> heard_concepts(const DmState& s) {
  std::vector<Concept> out;
  for (Slot slot : kRequiredSlots) {
    auto it = s.store.find(slot);
    if (it != s.store.end() && it->second.status == SlotStatus::Heard)
      out.push_back({slot, it->second.value});
  }
  return out;
}

inline bool all_required_confirmed(const DmState& s) {
  for (Slot slot : kRequiredSlots) {
    auto it = s.store.find(slot);
    if (it == s.store.end() || it->second.status != SlotStatus::Confirmed)
      return false;
  }
  return true;
}

inline DmStep finish(DmState s, SystemAct act) {
  std::vector<std::string> words =
      render_system_words(s.strategy, act, s.answer_train);
  s.current_listen = act.listen_mode;
  s.last_act = act;
  return {std::move(s), std::move(act), std::move(words)};
}

inline DmStep reemit_last(DmState s) {
  if (!s.last_act) throw Error("dialogue manager has no act to repeat");
  SystemAct act = *s.last_act;
  return finish(std::move(s), std::move(act));
}

inline DmStep emit_greet(DmState s) {
  SystemAct act;
  act.type = ActType::Greet;
  s.phase = DmPhase::Acquire;
  s.expected_slots = {Slot::DepartureCity, Slot::ArrivalCity,
                      Slot::DepartureTime};
  if (s.strategy == Strategy::D2) s.expected_slots.insert(Slot::Confirmation);
  return finish(std::move(s), std::move(act));
}

inline DmStep emit_close(DmState s) {
  SystemAct act;
  act.type = ActType::Close;
  s.phase = DmPhase::Done;
  s.closed = true;
  return finish(std::move(s), std::move(act));
}

inline DmStep emit_refer_operator(DmState s) {
  SystemAct act;
  act.type = ActType::ReferOperator;
  s.phase = DmPhase::Done;
  s.closed = true;
  return finish(std::move(s), std::move(act));
}

}  // namespace dm_detail

// ---------------------------------------------------------------------------
// D1
// ---------------------------------------------------------------------------

namespace dm_detail {

inline DmStep d1_emit_ask(DmState s, Slot slot, bool repair = false) {
  SystemAct act;
  act.type = ActType::AskSlot;
  act.slot = slot;
  // Re-acquiring a single denied concept is done in isolated-word mode,
  // the robust interaction modality reserved for repair.
  act.listen_mode = repair ? strongest(ChannelMode::IsolatedWord, s.channel_mode)
                           : s.channel_mode;
  s.phase = DmPhase::Acquire;
  s.expected_slots = {slot};
  return finish(std::move(s), std::move(act));
}

inline DmStep d1_emit_confirm_one(DmState s, Concept item) {
  SystemAct act;
  act.type = ActType::ConfirmOne;
  act.slot = item.slot;
  if (item.slot == Slot::DepartureTime)
    act.window = window_for(Strategy::D1, item.value);
  act.items = {item};
  act.listen_mode = strongest(ChannelMode::IsolatedWord, s.channel_mode);
  s.pending_confirm = {std::move(item)};
  s.phase = DmPhase::ConfirmOne;
  s.expected_slots = {Slot::Confirmation};
  return finish(std::move(s), std::move(act));
}

inline DmStep d1_emit_confirm_bunch(DmState s, std::vector<Concept> items) {
  SystemAct act;
  act.type = ActType::ConfirmBunch;
  act.items = items;
  for (const auto& c : items)
    if (c.slot == Slot::DepartureTime)
      act.window = window_for(Strategy::D1, c.value);
  act.listen_mode = strongest(ChannelMode::IsolatedWord, s.channel_mode);
  s.pending_confirm = std::move(items);
  s.phase = DmPhase::ConfirmBunch;
  s.expected_slots = {Slot::Confirmation};
  return finish(std::move(s), std::move(act));
}

inline DmStep d1_emit_answer(DmState s, const TimetableDB& db) {
  TrainAnswer a;
  a.dep_city = s.store[Slot::DepartureCity].value;
  a.arr_city = s.store[Slot::ArrivalCity].value;
  const TimeWindow window =
      window_for(Strategy::D1, s.store[Slot::DepartureTime].value);
  std::vector<TrainRecord> trains;
  try {
    trains = db.lookup_trains(a.dep_city, a.arr_city, window);
  } catch (const UnknownRouteError&) {
    // Information unavailable: report the failure honestly.
  }
  SystemAct act;
  act.type = ActType::GiveAnswer;
  act.window = window;
  // The detail offer is itself a yes/no question.
  act.listen_mode = strongest(ChannelMode::IsolatedWord, s.channel_mode);
  if (!trains.empty()) {
    const TrainRecord& t = trains.front();
    a.found = true;
    a.train_id = t.id;
    a.train_type = t.type;
    a.dep_station = t.dep_station;
    a.arr_station = t.arr_station;
    a.dep_minute = t.dep_minute;
    a.arr_minute = t.arr_minute;
    a.overnight = t.overnight;
    act.offer = OfferKind::Details;
    s.answer_train = t;
  } else {
    s.answer_train.reset();
  }
  act.answer = a;
  s.answer = a;
  s.phase = DmPhase::Details;
  s.expected_slots = {Slot::Confirmation, Slot::TrainType, Slot::ServiceQuery,
                      Slot::CostOfTicketQuery, Slot::MoreInfoQuery};
  return finish(std::move(s), std::move(act));
}

// Decide D1's next action from the slot store alone.
inline DmStep d1_next_move(DmState s, const TimetableDB& db) {
  for (Slot slot : {Slot::DepartureCity, Slot::ArrivalCity})
    if (s.store[slot].status == SlotStatus::Empty) return d1_emit_ask(std::move(s), slot);
  std::vector<Concept> heard = heard_concepts(s);
  if (!heard.empty()) {
    if (heard.size() == 1 || s.per_concept_confirm)
      return d1_emit_confirm_one(std::move(s), heard.front());
    return d1_emit_confirm_bunch(std::move(s), std::move(heard));
  }
  if (s.store[Slot::DepartureTime].status == SlotStatus::Empty)
    return d1_emit_ask(std::move(s), Slot::DepartureTime);
  if (!all_required_confirmed(s))
    throw Error("d1_next_move: inconsistent slot store");
  return d1_emit_answer(std::move(s), db);
}

inline DmStep d1_handle_failure(DmState s) {
  ++s.repeat_count;
  if (s.repeat_count >= 2 * s.config.d1_mode_switch_after)
    s.channel_mode = ChannelMode::Spelling;
  else if (s.repeat_count >= s.config.d1_mode_switch_after)
    s.channel_mode = ChannelMode::IsolatedWord;
  SystemAct act;
  act.type = ActType::RequestRepeat;
  act.listen_mode = strongest(s.current_listen, s.channel_mode);
  return finish(std::move(s), std::move(act));
}

}  // namespace dm_detail

inline DmStep d1_step(DmState s, const SemanticFrame& input,
                      const TimetableDB& db) {
  using namespace dm_detail;
  if (s.strategy != Strategy::D1) throw Error("d1_step on a non-D1 state");
  if (s.closed) throw Error("d1_step: dialogue already closed");
  if (s.phase == DmPhase::Start) return emit_greet(std::move(s));

  if (input.empty()) return d1_handle_failure(std::move(s));
  s.repeat_count = 0;

  const SemanticFrame accepted = filter_expected(input, s.expected_slots);

  switch (s.phase) {
    case DmPhase::Acquire: {
      for (const auto& [slot, value] : accepted.concepts())
        if (slot != Slot::Confirmation) set_heard(s, slot, value);
      return d1_next_move(std::move(s), db);
    }
    case DmPhase::ConfirmBunch: {
      const auto conf = accepted.value(Slot::Confirmation);
      if (!conf) return reemit_last(std::move(s));
      if (*conf == "YES") {
        for (const auto& item : s.pending_confirm)
          s.store[item.slot] = {item.value, SlotStatus::Confirmed};
        s.pending_confirm.clear();
        return d1_next_move(std::move(s), db);
      }
      // Bunch denied: fall back to concept-by-concept confirmation.
      s.per_concept_confirm = true;
      std::vector<Concept> heard = heard_concepts(s);
      if (heard.empty()) throw Error("d1_step: denied bunch left nothing heard");
      return d1_emit_confirm_one(std::move(s), heard.front());
    }
    case DmPhase::ConfirmOne: {
      const auto conf = accepted.value(Slot::Confirmation);
      if (!conf) return reemit_last(std::move(s));
      if (s.pending_confirm.empty())
        throw Error("d1_step: confirm phase without a pending item");
      const Concept item = s.pending_confirm.front();
      s.pending_confirm.clear();
      if (*conf == "YES") {
        s.store[item.slot] = {item.value, SlotStatus::Confirmed};
        return d1_next_move(std::move(s), db);
      }
      // Denied: drop the value and re-ask the slot in repair mode.
      s.store[item.slot] = SlotEntry{};
      return d1_emit_ask(std::move(s), item.slot, /*repair=*/true);
    }
    case DmPhase::Details: {
      if (!s.answer || !s.answer->found) return emit_close(std::move(s));
      std::vector<Concept> queries;
      for (Slot q : {Slot::TrainType, Slot::ServiceQuery,
                     Slot::CostOfTicketQuery, Slot::MoreInfoQuery})
        if (auto v = accepted.value(q)) queries.push_back({q, *v});
      const auto conf = accepted.value(Slot::Confirmation);
      if (queries.empty() && conf && *conf == "YES")
        queries.push_back({Slot::MoreInfoQuery, kQueryValue});
      if (!queries.empty()) {
        SystemAct act;
        act.type = ActType::GiveAnswer;
        act.answer = s.answer;
        act.answered = std::move(queries);
        act.offer = OfferKind::Details;
        act.listen_mode = strongest(ChannelMode::IsolatedWord, s.channel_mode);
        return finish(std::move(s), std::move(act));
      }
      if (conf && *conf == "NO") return emit_close(std::move(s));
      return reemit_last(std::move(s));
    }
    default:
      throw Error("d1_step: impossible phase");
  }
}

// ---------------------------------------------------------------------------
// D2
// ---------------------------------------------------------------------------

namespace dm_detail {

// D2's interpretation focus is always wide: it listens for route concepts,
// confirmations and query concepts alike in every phase.
inline std::set<Slot> d2_collect_expected() {
  return {Slot::DepartureCity,     Slot::ArrivalCity, Slot::DepartureTime,
          Slot::Confirmation,      Slot::ServiceQuery,
          Slot::CostOfTicketQuery, Slot::MoreInfoQuery};
}

inline DmStep d2_emit_ask(DmState s, Slot slot, std::vector<Concept> embeds) {
  SystemAct act;
  act.type = ActType::AskSlot;
  act.slot = slot;
  act.embedded = embeds;
  s.embedded_pending = std::move(embeds);
  s.phase = DmPhase::Acquire;
  s.expected_slots = d2_collect_expected();
  return finish(std::move(s), std::move(act));
}

inline DmStep d2_emit_confirm(DmState s, std::vector<Concept> items) {
  SystemAct act;
  act.type = items.size() == 1 ? ActType::ConfirmOne : ActType::ConfirmBunch;
  if (items.size() == 1) act.slot = items.front().slot;
  act.items = items;
  for (const auto& c : items)
    if (c.slot == Slot::DepartureTime)
      act.window = window_for(Strategy::D2, c.value);
  s.pending_confirm = std::move(items);
  s.phase = DmPhase::ConfirmBunch;
  s.expected_slots = d2_collect_expected();
  return finish(std::move(s), std::move(act));
}

inline DmStep d2_emit_answer(DmState s, const TimetableDB& db) {
  // Unconfirmed concepts are implicitly confirmed by the answer itself:
  // the wording restates the route, and the caller can always object.
  std::vector<Concept> implicit;
  for (Slot slot : kRequiredSlots) {
    auto& entry = s.store[slot];
    if (entry.status == SlotStatus::Heard) {
      implicit.push_back({slot, entry.value});
      entry.status = SlotStatus::Confirmed;
    }
  }
  TrainAnswer a;
  a.dep_city = s.store[Slot::DepartureCity].value;
  a.arr_city = s.store[Slot::ArrivalCity].value;
  a.type_spoken = true;
  const TimeWindow window =
      window_for(Strategy::D2, s.store[Slot::DepartureTime].value);
  std::vector<TrainRecord> trains;
  try {
    trains = db.lookup_trains(a.dep_city, a.arr_city, window);
  } catch (const UnknownRouteError&) {
  }
  SystemAct act;
  act.type = ActType::GiveAnswer;
  act.window = window;
  act.offer = OfferKind::Another;
  act.embedded = std::move(implicit);
  if (!trains.empty()) {
    const TrainRecord& t = trains.front();
    a.found = true;
    a.train_id = t.id;
    a.train_type = t.type;
    a.dep_station = t.dep_station;
    a.arr_station = t.arr_station;
    a.dep_minute = t.dep_minute;
    a.arr_minute = t.arr_minute;
    a.overnight = t.overnight;
    s.answer_train = t;
  } else {
    s.answer_train.reset();
  }
  act.answer = a;
  s.answer = a;
  ++s.routes_served;
  s.phase = DmPhase::Answered;
  s.expected_slots = {Slot::DepartureCity,     Slot::ArrivalCity,
                      Slot::DepartureTime,     Slot::Confirmation,
                      Slot::TrainType,         Slot::ServiceQuery,
                      Slot::CostOfTicketQuery, Slot::MoreInfoQuery};
  return finish(std::move(s), std::move(act));
}

inline DmStep d2_next_move(DmState s, const TimetableDB& db) {
  for (Slot slot : kRequiredSlots) {
    if (s.store[slot].status == SlotStatus::Empty)
      return d2_emit_ask(std::move(s), slot, heard_concepts(s));
  }
  // Nothing left to ask: answer right away, folding anything still
  // unconfirmed into the answer. Explicit confirmation is reserved for
  // repair (after a denial).
  return d2_emit_answer(std::move(s), db);
}

inline DmStep d2_emit_cant_help(DmState s) {
  SystemAct act;
  act.type = ActType::CantHelp;
  if (s.phase == DmPhase::Answered) act.offer = OfferKind::Another;
  return finish(std::move(s), std::move(act));
}

}  // namespace dm_detail

inline DmStep d2_step(DmState s, const SemanticFrame& input,
                      const TimetableDB& db) {
  using namespace dm_detail;
  if (s.strategy != Strategy::D2) throw Error("d2_step on a non-D2 state");
  if (s.closed) throw Error("d2_step: dialogue already closed");
  if (s.phase == DmPhase::Start) return emit_greet(std::move(s));

  if (input.empty()) {
    if (s.repeat_count >= 3) return emit_refer_operator(std::move(s));
    ++s.repeat_count;
    SystemAct act;
    act.type = ActType::RequestRepeat;
    act.listen_mode = s.repeat_count == 3 ? ChannelMode::Spelling
                                          : ChannelMode::Continuous;
    return finish(std::move(s), std::move(act));
  }
  s.repeat_count = 0;

  const SemanticFrame accepted = filter_expected(input, s.expected_slots);
  const auto conf = accepted.value(Slot::Confirmation);
  auto has_slot_concepts = [&accepted]() {
    for (Slot slot : kRequiredSlots)
      if (accepted.has(slot)) return true;
    return false;
  };
  auto has_query = [&accepted]() {
    for (Slot q : {Slot::ServiceQuery, Slot::CostOfTicketQuery,
                   Slot::MoreInfoQuery})
      if (accepted.has(q)) return true;
    return false;
  };

  // Service queries get a cannot-help response wherever they show up; the
  // wide focus takes them up instead of discarding them. Route concepts in
  // the same utterance are still absorbed before answering.
  if (has_query() && s.phase != DmPhase::Answered) {
    for (const auto& [slot, value] : accepted.concepts())
      for (Slot required : kRequiredSlots)
        if (slot == required) set_heard(s, slot, value);
    return d2_emit_cant_help(std::move(s));
  }

  switch (s.phase) {
    case DmPhase::Acquire: {
      const bool denied = conf && *conf == "NO";
      // A served caller declining a fresh question wants to hang up.
      if (denied && s.routes_served >= 1 && !has_slot_concepts())
        return emit_close(std::move(s));
      bool conflict = false;
      bool corrections = false;
      for (const auto& e : s.embedded_pending) {
        if (auto v = accepted.value(e.slot); v && *v != e.value) {
          conflict = true;
          corrections = true;
        }
      }
      const bool engaged = conf.has_value() || has_slot_concepts();
      if (!s.embedded_pending.empty()) {
        if (!engaged) return reemit_last(std::move(s));
        if (denied || conflict) {
          // Corrected embeds are re-heard; the untouched ones count as
          // implicitly confirmed unless the denial carried no corrections.
          for (const auto& e : s.embedded_pending) {
            if (auto v = accepted.value(e.slot); v && *v != e.value)
              s.store[e.slot] = {*v, SlotStatus::Heard};
            else if (corrections)
              s.store[e.slot] = {e.value, SlotStatus::Confirmed};
            else
              s.store[e.slot] = SlotEntry{};
          }
        } else {
          for (const auto& e : s.embedded_pending)
            s.store[e.slot] = {e.value, SlotStatus::Confirmed};
        }
        s.embedded_pending.clear();
      } else if (!engaged) {
        return reemit_last(std::move(s));
      }
      for (const auto& [slot, value] : accepted.concepts())
        if (slot != Slot::Confirmation) set_heard(s, slot, value);
      if ((denied || conflict)) {
        std::vector<Concept> heard = heard_concepts(s);
        if (!heard.empty())
          return d2_emit_confirm(std::move(s), std::move(heard));
      }
      return d2_next_move(std::move(s), db);
    }
    case DmPhase::ConfirmBunch: {
      bool conflict = false;
      bool corrections = false;
      for (const auto& item : s.pending_confirm) {
        if (auto v = accepted.value(item.slot); v && *v != item.value) {
          conflict = true;
          corrections = true;
        }
      }
      if (conf && *conf == "YES" && !conflict) {
        for (const auto& item : s.pending_confirm)
          s.store[item.slot] = {item.value, SlotStatus::Confirmed};
        s.pending_confirm.clear();
        return d2_next_move(std::move(s), db);
      }
      if ((conf && *conf == "NO") || conflict) {
        for (const auto& item : s.pending_confirm) {
          if (auto v = accepted.value(item.slot); v && *v != item.value)
            s.store[item.slot] = {*v, SlotStatus::Heard};
          else if (corrections)
            s.store[item.slot] = {item.value, SlotStatus::Heard};
          else
            s.store[item.slot] = SlotEntry{};
        }
        s.pending_confirm.clear();
        for (const auto& [slot, value] : accepted.concepts())
          if (slot != Slot::Confirmation) set_heard(s, slot, value);
        std::vector<Concept> heard = heard_concepts(s);
        if (!heard.empty())
          return d2_emit_confirm(std::move(s), std::move(heard));
        return d2_next_move(std::move(s), db);
      }
      if (has_slot_concepts()) {
        // New information volunteered instead of a plain answer.
        for (const auto& [slot, value] : accepted.concepts())
          if (slot != Slot::Confirmation) set_heard(s, slot, value);
        std::vector<Concept> heard = heard_concepts(s);
        return d2_emit_confirm(std::move(s), std::move(heard));
      }
      return reemit_last(std::move(s));
    }
    case DmPhase::Answered: {
      bool has_query = false;
      for (Slot q : {Slot::ServiceQuery, Slot::CostOfTicketQuery,
                     Slot::MoreInfoQuery})
        if (accepted.has(q)) has_query = true;
      if (auto v = accepted.value(Slot::TrainType); v && *v == kQueryValue)
        has_query = true;
      if (has_query) return d2_emit_cant_help(std::move(s));
      if (conf && *conf == "NO" && has_slot_concepts()) {
        // The answer itself was denied with corrections: repair the
        // corrected concepts and confirm them explicitly.
        for (const auto& [slot, value] : accepted.concepts())
          for (Slot required : kRequiredSlots)
            if (slot == required) s.store[slot] = {value, SlotStatus::Heard};
        s.answer.reset();
        s.answer_train.reset();
        std::vector<Concept> heard = heard_concepts(s);
        return d2_emit_confirm(std::move(s), std::move(heard));
      }
      if ((conf && *conf == "YES") || has_slot_concepts()) {
        // Another route requested in the same call.
        for (Slot slot : kRequiredSlots) s.store[slot] = SlotEntry{};
        for (const auto& [slot, value] : accepted.concepts())
          if (slot != Slot::Confirmation && slot != Slot::TrainType)
            set_heard(s, slot, value);
        s.answer.reset();
        s.answer_train.reset();
        return d2_next_move(std::move(s), db);
      }
      if (conf && *conf == "NO") return emit_close(std::move(s));
      return reemit_last(std::move(s));
    }
    default:
      throw Error("d2_step: impossible phase");
  }
}

inline DmStep dm_step(DmState s, const SemanticFrame& input,
                      const TimetableDB& db) {
  return s.strategy == Strategy::D1 ? d1_step(std::move(s), input, db)
                                    : d2_step(std::move(s), input, db);
}

}  // namespace dialeval::sim
