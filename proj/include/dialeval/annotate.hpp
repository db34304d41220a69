// Rule-based auto-annotation. For simulated dialogues the ground truth is
// known exactly, so a deterministic rule set can play the role of the
// expert judging the logfiles.
//
// System turns get a three-valued contextual-appropriateness tag:
//   AP — delivers correct requested information, asks for an essential
//        missing constraint, or introduces/continues a repair. Explicit
//        confirmation of a wrong value is repair, hence AP.
//   IA — asserts or presupposes a value contradicting the user's ground
//        truth (the implicit embedding of a wrong value), answers a query
//        the user never made, or supplies wrong information.
//   AM — re-asks or re-confirms an already confirmed concept, or delivers
//        unrequested extra information.
//
// User turns get a frame classification (from the ref/hyp diff), a
// recovery verdict for PARTIAL turns (recovered iff the immediately
// following system turn is AP), and a correction label: replies to
// repetition requests, denials of confirmations or embeds, and re-supplied
// concepts are UTC; repetition requests themselves are STC; everything
// else is a normal turn.
//
// Manually annotated fields (per-field provenance) are never overwritten.

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/alignment.hpp"
#include "dialeval/types.hpp"

namespace dialeval::annotate {

struct AnnotationRules {
  std::string version = "ar1";
  bool count_greeting = true;   // greetings keep their CA tag in tallies
  bool detect_ambiguous = true;
};

namespace annotate_detail {

struct TruthModel {
  std::string departure_city;
  std::string arrival_city;
  std::optional<std::string> time_pref;  // first departure-time the user said

  std::optional<std::string> truth_for(Slot slot) const {
    switch (slot) {
      case Slot::DepartureCity: return departure_city;
      case Slot::ArrivalCity: return arrival_city;
      case Slot::DepartureTime: return time_pref;
      default: return std::nullopt;
    }
  }
};

inline TruthModel build_truth(const Dialogue& d, const Scenario& scenario) {
  TruthModel truth;
  truth.departure_city = scenario.departure_city;
  truth.arrival_city = scenario.arrival_city;
  for (const auto& t : d.turns) {
    if (t.speaker != Speaker::User || !t.ref_frame) continue;
    if (auto v = t.ref_frame->value(Slot::DepartureTime)) {
      truth.time_pref = *v;
      break;
    }
  }
  if (!truth.time_pref && scenario.departure_time_preference != "free")
    truth.time_pref = scenario.departure_time_preference;
  return truth;
}

// Does a detail answer to `query` respond to something the user asked in
// the preceding turn? A bare YES to a details offer counts as asking for
// more information.
inline bool query_intended(const Concept& query, const SemanticFrame& ref) {
  if (auto v = ref.value(query.slot); v && *v == query.value) return true;
  if (query.slot == Slot::MoreInfoQuery) {
    if (auto c = ref.value(Slot::Confirmation); c && *c == "YES") return true;
  }
  return false;
}

inline std::vector<std::string> delivered_by_detail(const Concept& query) {
  if (query.slot == Slot::TrainType) return {attr::kTrainType};
  if (query.slot == Slot::CostOfTicketQuery) return {attr::kCost};
  if (query.slot == Slot::MoreInfoQuery)
    return {attr::kTrainType, attr::kRestaurant, attr::kSleepingCar,
            attr::kReservation};
  if (query.value == "RESTAURANT") return {attr::kRestaurant};
  if (query.value == "SLEEPING_CAR") return {attr::kSleepingCar};
  if (query.value == "RESERVATION") return {attr::kReservation};
  return {};
}

struct SystemJudgement {
  std::vector<CaTag> tags;            // indexed like d.turns, None for users
  std::set<std::string> delivered;    // scenario attributes delivered
  bool closed_normally = false;       // dialogue ended with a CLOSE act
};

inline SystemJudgement judge_system_turns(const Dialogue& d,
                                          const TruthModel& truth,
                                          const AnnotationRules& rules) {
  SystemJudgement out;
  out.tags.assign(d.turns.size(), CaTag::None);

  // Shadow of what has been explicitly or implicitly confirmed, used for
  // the ambiguity rule.
  std::map<Slot, std::string> confirmed;
  bool route_answer_correct = false;

  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Turn& t = d.turns[i];
    if (t.speaker != Speaker::System) continue;
    if (!t.system_act)
      throw Error("auto_annotate: system turn " + std::to_string(t.index) +
                  " of dialogue '" + d.id + "' lacks a system act");
    const SystemAct& act = *t.system_act;
    const SemanticFrame* prev_ref = nullptr;
    const SemanticFrame* next_hyp = nullptr;
    if (i > 0 && d.turns[i - 1].ref_frame)
      prev_ref = &*d.turns[i - 1].ref_frame;
    if (i + 1 < d.turns.size() && d.turns[i + 1].hyp_frame)
      next_hyp = &*d.turns[i + 1].hyp_frame;

    CaTag tag = CaTag::AP;
    switch (act.type) {
      case ActType::Greet:
      case ActType::Close:
      case ActType::ReferOperator:
      case ActType::RequestRepeat:
        break;  // appropriate directives and diagnostics

      case ActType::AskSlot: {
        for (const auto& e : act.embedded) {
          auto tv = truth.truth_for(e.slot);
          if (tv && *tv != e.value) tag = CaTag::IA;
        }
        if (tag == CaTag::AP && rules.detect_ambiguous && act.slot &&
            confirmed.count(*act.slot))
          tag = CaTag::AM;
        // Presenting a different value visibly drops an earlier
        // confirmation of the slot.
        for (const auto& e : act.embedded) {
          auto it = confirmed.find(e.slot);
          if (it != confirmed.end() && it->second != e.value)
            confirmed.erase(it);
        }
        // Embeds become implicitly confirmed once the user engages with
        // the question without denying or correcting them.
        if (next_hyp && !next_hyp->empty()) {
          auto conf = next_hyp->value(Slot::Confirmation);
          const bool denied = conf && *conf == "NO";
          bool engaged = conf.has_value();
          for (Slot s : {Slot::DepartureCity, Slot::ArrivalCity,
                         Slot::DepartureTime})
            if (next_hyp->has(s)) engaged = true;
          for (const auto& e : act.embedded) {
            auto v = next_hyp->value(e.slot);
            if (engaged && !denied && (!v || *v == e.value))
              confirmed[e.slot] = e.value;
          }
        }
        break;
      }

      case ActType::ConfirmOne:
      case ActType::ConfirmBunch: {
        if (rules.detect_ambiguous) {
          bool all_confirmed = !act.items.empty();
          for (const auto& item : act.items) {
            auto it = confirmed.find(item.slot);
            if (it == confirmed.end() || it->second != item.value)
              all_confirmed = false;
          }
          if (all_confirmed) tag = CaTag::AM;
        }
        for (const auto& item : act.items) {
          auto it = confirmed.find(item.slot);
          if (it != confirmed.end() && it->second != item.value)
            confirmed.erase(it);
        }
        if (next_hyp) {
          auto conf = next_hyp->value(Slot::Confirmation);
          if (conf && *conf == "YES")
            for (const auto& item : act.items)
              confirmed[item.slot] = item.value;
        }
        break;
      }

      case ActType::GiveAnswer: {
        if (!act.answer) throw Error("GIVE_ANSWER act without a payload");
        const TrainAnswer& a = *act.answer;
        if (!act.answered.empty()) {
          // Detail answer about the train on the table. Answering only
          // misheard queries means the utterance was interpreted in the
          // wrong context (IA); answering the request plus phantom extras
          // is over-informative (AM).
          std::size_t intended = 0;
          for (const auto& q : act.answered)
            if (prev_ref && query_intended(q, *prev_ref)) ++intended;
          if (intended == act.answered.size())
            tag = CaTag::AP;
          else if (intended == 0)
            tag = CaTag::IA;
          else
            tag = CaTag::AM;
          if (route_answer_correct)
            for (const auto& q : act.answered)
              for (const auto& attr : delivered_by_detail(q))
                out.delivered.insert(attr);
        } else if (!a.found) {
          tag = CaTag::AP;  // honest unavailability
        } else {
          bool correct = a.dep_city == truth.departure_city &&
                         a.arr_city == truth.arrival_city;
          if (correct && truth.time_pref) {
            const TimeWindow want =
                window_for(d.strategy, *truth.time_pref);
            correct = want.contains(a.dep_minute);
          }
          if (correct) {
            route_answer_correct = true;
            out.delivered.insert(attr::kTimes);
            if (a.type_spoken) out.delivered.insert(attr::kTrainType);
          } else {
            route_answer_correct = false;
            tag = CaTag::IA;  // wrong information
          }
          // The answer consumes the route; confirmations of a follow-up
          // route are a fresh scope.
          confirmed.clear();
        }
        break;
      }

      case ActType::CantHelp: {
        bool asked = false;
        if (prev_ref) {
          for (Slot q : {Slot::ServiceQuery, Slot::CostOfTicketQuery,
                         Slot::MoreInfoQuery})
            if (prev_ref->has(q)) asked = true;
          if (auto v = prev_ref->value(Slot::TrainType);
              v && *v == kQueryValue)
            asked = true;
        }
        tag = asked ? CaTag::AP : CaTag::IA;
        break;
      }
    }
    out.tags[i] = tag;
    if (act.type == ActType::Close) out.closed_normally = true;
  }
  return out;
}

}  // namespace annotate_detail

// Recompute transaction success from the acts alone: every required
// scenario attribute delivered by a GIVE_ANSWER about the right route, and
// the dialogue closed normally (capped or operator-referred dialogues
// fail).
inline bool derive_transaction_success(const Dialogue& d,
                                       const Scenario& scenario) {
  using namespace annotate_detail;
  const TruthModel truth = build_truth(d, scenario);
  const SystemJudgement judgement =
      judge_system_turns(d, truth, AnnotationRules{});
  if (!judgement.closed_normally) return false;
  for (const auto& attr : scenario.required_attributes)
    if (!judgement.delivered.count(attr)) return false;
  return true;
}

inline Dialogue auto_annotate(Dialogue d, const Scenario& scenario,
                              const AnnotationRules& rules = {}) {
  using namespace annotate_detail;
  const TruthModel truth = build_truth(d, scenario);
  const SystemJudgement judgement = judge_system_turns(d, truth, rules);

  auto manual = [](const Turn& t, const char* field) {
    const auto& mf = t.annotations.manual_fields;
    return std::find(mf.begin(), mf.end(), field) != mf.end();
  };

  // System turns: CA tags and the STC label.
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    Turn& t = d.turns[i];
    if (t.speaker != Speaker::System) continue;
    if (!manual(t, "ca_tag")) t.annotations.ca_tag = judgement.tags[i];
    if (!manual(t, "correction"))
      t.annotations.correction =
          t.system_act->type == ActType::RequestRepeat ? Correction::Stc
                                                       : Correction::Normal;
  }

  // User turns: frame class, recovery, correction label.
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    Turn& t = d.turns[i];
    if (t.speaker != Speaker::User) continue;
    if (!t.ref_frame || !t.hyp_frame)
      throw Error("auto_annotate: user turn " + std::to_string(t.index) +
                  " of dialogue '" + d.id + "' lacks ground-truth frames");
    const SemanticFrame& ref = *t.ref_frame;

    if (!manual(t, "frame_class"))
      t.annotations.frame_class = align::classify_frame(ref, *t.hyp_frame);
    if (!manual(t, "recovered")) {
      if (t.annotations.frame_class == FrameClass::Partial) {
        bool recovered = i + 1 < d.turns.size() &&
                         judgement.tags[i + 1] == CaTag::AP;
        t.annotations.recovered = recovered;
      } else {
        t.annotations.recovered.reset();
      }
    }

    if (!manual(t, "correction")) {
      Correction label = Correction::Normal;
      const SystemAct* prev =
          i > 0 && d.turns[i - 1].system_act ? &*d.turns[i - 1].system_act
                                             : nullptr;
      const auto conf = ref.value(Slot::Confirmation);
      const bool denies = conf && *conf == "NO";
      if (prev && prev->type == ActType::RequestRepeat) {
        label = Correction::Utc;  // repeat or rephrase
      } else if (denies && prev &&
                 (prev->type == ActType::ConfirmOne ||
                  prev->type == ActType::ConfirmBunch ||
                  (prev->type == ActType::AskSlot && !prev->embedded.empty()))) {
        label = Correction::Utc;  // detects or corrects an error
      } else if (denies && prev && prev->type == ActType::GiveAnswer) {
        // Objecting to the answer with corrections detects an error; a
        // bare no just declines the offer.
        for (const auto& [slot, value] : ref.concepts())
          if (slot != Slot::Confirmation) label = Correction::Utc;
      }
      // Everything else is a normal turn: information requests and
      // answers to appropriate directives, including answers to re-asked
      // slots after a repair.
      t.annotations.correction = label;
    }
  }

  bool ts = judgement.closed_normally;
  for (const auto& attr : scenario.required_attributes)
    if (!judgement.delivered.count(attr)) ts = false;
  d.transaction_success = ts;
  return d;
}

inline Corpus auto_annotate_corpus(Corpus corpus, const ScenarioSet& scenarios,
                                   const AnnotationRules& rules = {}) {
  for (auto& d : corpus.dialogues) {
    auto it = scenarios.find(d.scenario_id);
    if (it == scenarios.end())
      throw Error("auto_annotate: scenario '" + d.scenario_id +
                  "' of dialogue '" + d.id + "' does not resolve");
    d = auto_annotate(std::move(d), it->second, rules);
  }
  corpus.metadata.annotation_rules = rules.version;
  return corpus;
}

// ---------------------------------------------------------------------------
// Manual annotation sidecars
// ---------------------------------------------------------------------------

struct SidecarEntry {
  std::string dialogue_id;
  int turn_index = 0;
  std::string field;
  std::string value;
};

inline std::vector<SidecarEntry> sidecar_from_string(const std::string& text) {
  std::vector<SidecarEntry> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (rec.value("record", "annotation") != "annotation")
      throw ParseError("expected an annotation record", line_no);
    SidecarEntry entry;
    entry.dialogue_id = rec.value("dialogue_id", "");
    entry.turn_index = rec.value("turn_index", -1);
    entry.field = rec.value("field", "");
    if (rec.contains("value")) {
      if (rec["value"].is_boolean())
        entry.value = rec["value"].get<bool>() ? "true" : "false";
      else
        entry.value = rec["value"].get<std::string>();
    }
    if (entry.dialogue_id.empty() || entry.turn_index < 0 ||
        entry.field.empty())
      throw ParseError("annotation record needs dialogue_id, turn_index and field",
                       line_no);
    out.push_back(std::move(entry));
  }
  return out;
}

inline std::vector<SidecarEntry> load_sidecar(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sidecar file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sidecar_from_string(buf.str());
}

// MANUAL entries override AUTO entries field by field; later sidecar lines
// win over earlier ones.
inline Corpus merge_annotations(Corpus corpus,
                                const std::vector<SidecarEntry>& sidecar) {
  std::map<std::string, Dialogue*> by_id;
  for (auto& d : corpus.dialogues) by_id[d.id] = &d;

  for (const auto& entry : sidecar) {
    const std::string key = "(" + entry.dialogue_id + ", turn " +
                            std::to_string(entry.turn_index) + ")";
    auto it = by_id.find(entry.dialogue_id);
    if (it == by_id.end())
      throw Error("sidecar key " + key + " names an unknown dialogue");
    Dialogue& d = *it->second;
    if (entry.turn_index >= static_cast<int>(d.turns.size()))
      throw Error("sidecar key " + key + " names a nonexistent turn");
    Turn& t = d.turns[entry.turn_index];

    if (entry.field == "ca_tag") {
      if (t.speaker != Speaker::System)
        throw Error("sidecar " + key + ": ca_tag on a user turn");
      auto v = ca_tag_from_name(entry.value);
      if (!v) throw Error("sidecar " + key + ": bad ca_tag value");
      t.annotations.ca_tag = *v;
    } else if (entry.field == "correction") {
      auto v = correction_from_name(entry.value);
      if (!v) throw Error("sidecar " + key + ": bad correction value");
      t.annotations.correction = *v;
    } else if (entry.field == "frame_class") {
      if (t.speaker != Speaker::User)
        throw Error("sidecar " + key + ": frame_class on a system turn");
      auto v = frame_class_from_name(entry.value);
      if (!v) throw Error("sidecar " + key + ": bad frame_class value");
      t.annotations.frame_class = *v;
      if (*v != FrameClass::Partial) t.annotations.recovered.reset();
    } else if (entry.field == "recovered") {
      if (t.speaker != Speaker::User)
        throw Error("sidecar " + key + ": recovered on a system turn");
      if (t.annotations.frame_class != FrameClass::Partial)
        throw Error("sidecar " + key +
                    ": recovered is only valid on PARTIAL turns");
      if (entry.value != "true" && entry.value != "false")
        throw Error("sidecar " + key + ": bad recovered value");
      t.annotations.recovered = entry.value == "true";
    } else {
      throw Error("sidecar " + key + ": unknown field '" + entry.field + "'");
    }
    t.annotations.source = AnnotationSource::Manual;
    auto& mf = t.annotations.manual_fields;
    if (std::find(mf.begin(), mf.end(), entry.field) == mf.end())
      mf.push_back(entry.field);
  }
  return corpus;
}

}  // namespace dialeval::annotate
