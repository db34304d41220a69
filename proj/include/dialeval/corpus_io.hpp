// Line-delimited corpus format: one JSON object per line, UTF-8. A
// `dialogue` header record is followed by its `turn` records in order; an
// optional leading `corpus` record carries trial metadata. Keys are
// serialized in sorted order and numbers have a single canonical rendering,
// so saving the same corpus twice produces byte-identical files. Absent
// optional fields are omitted, never null.
//
// Durations are stored in seconds with one decimal digit; internally they
// are integer tenths of a second, so the round trip is exact.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/types.hpp"

namespace dialeval {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSON conversion helpers
// ---------------------------------------------------------------------------

namespace io_detail {

inline json frame_to_json(const SemanticFrame& f) {
  json obj = json::object();
  for (const auto& [slot, value] : f.concepts())
    obj[std::string(slot_name(slot))] = value;
  return obj;
}

inline SemanticFrame frame_from_json(const json& obj, int line) {
  if (!obj.is_object()) throw ParseError("frame must be an object", line);
  SemanticFrame f;
  for (const auto& [key, value] : obj.items()) {
    auto slot = slot_from_name(key);
    if (!slot) throw ParseError("unknown slot '" + key + "'", line);
    if (!value.is_string())
      throw ParseError("slot '" + key + "' value must be a string", line);
    f.set(*slot, value.get<std::string>());
  }
  return f;
}

inline json concepts_to_json(const std::vector<Concept>& cs) {
  json arr = json::array();
  for (const auto& c : cs)
    arr.push_back({{"slot", std::string(slot_name(c.slot))},
                   {"value", c.value}});
  return arr;
}

inline std::vector<Concept> concepts_from_json(const json& arr, int line) {
  if (!arr.is_array()) throw ParseError("expected a concept array", line);
  std::vector<Concept> out;
  for (const auto& item : arr) {
    auto slot = slot_from_name(item.value("slot", ""));
    if (!slot)
      throw ParseError("unknown slot '" + item.value("slot", "") + "'", line);
    out.push_back({*slot, item.value("value", "")});
  }
  return out;
}

inline json answer_to_json(const TrainAnswer& a) {
  json obj = json::object();
  obj["found"] = a.found;
  if (a.found) {
    obj["train_id"] = a.train_id;
    obj["train_type"] = a.train_type;
    obj["dep_time"] = format_minute(a.dep_minute);
    obj["arr_time"] = format_minute(a.arr_minute);
    if (a.overnight) obj["overnight"] = true;
    if (!a.dep_station.empty()) obj["dep_station"] = a.dep_station;
    if (!a.arr_station.empty()) obj["arr_station"] = a.arr_station;
  }
  obj["dep_city"] = a.dep_city;
  obj["arr_city"] = a.arr_city;
  if (a.type_spoken) obj["type_spoken"] = true;
  return obj;
}

inline TrainAnswer answer_from_json(const json& obj, int line) {
  TrainAnswer a;
  a.found = obj.value("found", false);
  a.train_id = obj.value("train_id", "");
  a.train_type = obj.value("train_type", "");
  a.dep_city = obj.value("dep_city", "");
  a.arr_city = obj.value("arr_city", "");
  a.dep_station = obj.value("dep_station", "");
  a.arr_station = obj.value("arr_station", "");
  if (obj.contains("dep_time")) a.dep_minute = parse_minute(obj["dep_time"].get<std::string>());
  if (obj.contains("arr_time")) a.arr_minute = parse_minute(obj["arr_time"].get<std::string>());
  a.overnight = obj.value("overnight", false);
  a.type_spoken = obj.value("type_spoken", false);
  (void)line;
  return a;
}

inline json act_to_json(const SystemAct& a) {
  json obj = json::object();
  obj["act"] = std::string(act_name(a.type));
  if (a.slot) obj["slot"] = std::string(slot_name(*a.slot));
  if (!a.items.empty()) obj["items"] = concepts_to_json(a.items);
  if (!a.embedded.empty()) obj["embedded"] = concepts_to_json(a.embedded);
  if (a.window) obj["window"] = a.window->to_string();
  if (a.listen_mode != ChannelMode::Continuous)
    obj["listen_mode"] = std::string(channel_mode_name(a.listen_mode));
  if (a.answer) obj["answer"] = answer_to_json(*a.answer);
  if (!a.answered.empty()) obj["answered"] = concepts_to_json(a.answered);
  if (a.offer != OfferKind::None)
    obj["offer"] = std::string(offer_name(a.offer));
  return obj;
}

inline SystemAct act_from_json(const json& obj, int line) {
  SystemAct a;
  auto type = act_from_name(obj.value("act", ""));
  if (!type)
    throw ParseError("unknown system act '" + obj.value("act", "") + "'",
                     line);
  a.type = *type;
  if (obj.contains("slot")) {
    auto slot = slot_from_name(obj["slot"].get<std::string>());
    if (!slot) throw ParseError("unknown slot in system act", line);
    a.slot = *slot;
  }
  if (obj.contains("items")) a.items = concepts_from_json(obj["items"], line);
  if (obj.contains("embedded"))
    a.embedded = concepts_from_json(obj["embedded"], line);
  if (obj.contains("window"))
    a.window = TimeWindow::parse(obj["window"].get<std::string>());
  if (obj.contains("listen_mode")) {
    auto mode = channel_mode_from_name(obj["listen_mode"].get<std::string>());
    if (!mode) throw ParseError("unknown listen_mode", line);
    a.listen_mode = *mode;
  }
  if (obj.contains("answer")) a.answer = answer_from_json(obj["answer"], line);
  if (obj.contains("answered"))
    a.answered = concepts_from_json(obj["answered"], line);
  if (obj.contains("offer")) {
    auto offer = offer_from_name(obj["offer"].get<std::string>());
    if (!offer) throw ParseError("unknown offer kind", line);
    a.offer = *offer;
  }
  return a;
}

inline json annotations_to_json(const AnnotationRecord& a) {
  json obj = json::object();
  if (a.ca_tag != CaTag::None)
    obj["ca_tag"] = std::string(ca_tag_name(a.ca_tag));
  if (a.correction != Correction::Normal)
    obj["correction"] = std::string(correction_name(a.correction));
  if (a.frame_class != FrameClass::None)
    obj["frame_class"] = std::string(frame_class_name(a.frame_class));
  if (a.recovered) obj["recovered"] = *a.recovered;
  if (a.source == AnnotationSource::Manual) obj["source"] = "MANUAL";
  if (!a.manual_fields.empty()) obj["manual_fields"] = a.manual_fields;
  return obj;
}

inline AnnotationRecord annotations_from_json(const json& obj, int line) {
  AnnotationRecord a;
  if (obj.contains("ca_tag")) {
    auto t = ca_tag_from_name(obj["ca_tag"].get<std::string>());
    if (!t) throw ParseError("unknown ca_tag", line);
    a.ca_tag = *t;
  }
  if (obj.contains("correction")) {
    auto c = correction_from_name(obj["correction"].get<std::string>());
    if (!c) throw ParseError("unknown correction label", line);
    a.correction = *c;
  }
  if (obj.contains("frame_class")) {
    auto f = frame_class_from_name(obj["frame_class"].get<std::string>());
    if (!f) throw ParseError("unknown frame_class", line);
    a.frame_class = *f;
  }
  if (obj.contains("recovered")) a.recovered = obj["recovered"].get<bool>();
  if (obj.value("source", "AUTO") == "MANUAL")
    a.source = AnnotationSource::Manual;
  if (obj.contains("manual_fields"))
    a.manual_fields = obj["manual_fields"].get<std::vector<std::string>>();
  return a;
}

// Durations cross the file boundary as seconds with one decimal digit.
inline double ds_to_seconds(int ds) { return ds / 10.0; }
inline int seconds_to_ds(double s) {
  return static_cast<int>(s * 10.0 + (s >= 0 ? 0.5 : -0.5));
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string corpus_to_string(const Corpus& corpus) {
  using namespace io_detail;
  std::ostringstream out;
  if (!corpus.metadata.empty()) {
    json meta = json::object();
    meta["record"] = "corpus";
    if (!corpus.metadata.trial_label.empty())
      meta["trial_label"] = corpus.metadata.trial_label;
    if (!corpus.metadata.config_digest.empty())
      meta["config_digest"] = corpus.metadata.config_digest;
    if (!corpus.metadata.annotation_rules.empty())
      meta["annotation_rules"] = corpus.metadata.annotation_rules;
    out << meta.dump() << '\n';
  }
  for (const auto& d : corpus.dialogues) {
    json head = json::object();
    head["record"] = "dialogue";
    head["id"] = d.id;
    head["scenario_id"] = d.scenario_id;
    head["strategy"] = std::string(strategy_name(d.strategy));
    head["seed"] = d.seed;
    head["transaction_success"] = d.transaction_success;
    head["synthetic_duration"] = ds_to_seconds(d.synthetic_duration_ds);
    out << head.dump() << '\n';
    for (const auto& t : d.turns) {
      json rec = json::object();
      rec["record"] = "turn";
      rec["index"] = t.index;
      rec["speaker"] = std::string(speaker_name(t.speaker));
      rec["words"] = t.words;
      if (!t.hyp_words.empty()) rec["hyp_words"] = t.hyp_words;
      if (t.ref_frame) rec["ref_frame"] = frame_to_json(*t.ref_frame);
      if (t.hyp_frame) rec["hyp_frame"] = frame_to_json(*t.hyp_frame);
      if (t.system_act) rec["system_act"] = act_to_json(*t.system_act);
      json ann = annotations_to_json(t.annotations);
      if (!ann.empty()) rec["annotations"] = ann;
      rec["duration"] = ds_to_seconds(t.duration_ds);
      out << rec.dump() << '\n';
    }
  }
  return out.str();
}

// Structural validation shared by load and the validate operation.
struct Violation {
  std::string dialogue_id;
  int turn_index = -1;  // -1 for dialogue-level violations
  std::string rule;
  std::string message;
};

inline std::vector<Violation> validate_corpus(const Corpus& corpus) {
  std::vector<Violation> out;
  auto flag = [&](const std::string& id, int turn, std::string rule,
                  std::string msg) {
    out.push_back({id, turn, std::move(rule), std::move(msg)});
  };

  std::set<std::string> seen_ids;
  for (const auto& d : corpus.dialogues) {
    if (!seen_ids.insert(d.id).second)
      flag(d.id, -1, "dialogue.id.unique", "duplicate dialogue id '" + d.id + "'");
    if (d.turns.empty()) {
      flag(d.id, -1, "dialogue.turns.nonempty", "dialogue has no turns");
      continue;
    }
    long duration_sum = 0;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      const Turn& t = d.turns[i];
      const int ti = static_cast<int>(i);
      if (t.index != ti)
        flag(d.id, ti, "turn.index.ordinal",
             "turn index " + std::to_string(t.index) + " at position " +
                 std::to_string(i));
      const Speaker expected =
          (i % 2 == 0) ? Speaker::System : Speaker::User;
      if (t.speaker != expected)
        flag(d.id, ti, "turn.alternation",
             "speakers must alternate starting with SYSTEM");
      if (t.speaker == Speaker::System) {
        if (!t.system_act)
          flag(d.id, ti, "turn.system.act", "system turn lacks a system_act");
        if (t.ref_frame || t.hyp_frame)
          flag(d.id, ti, "turn.system.frames",
               "system turn must not carry frames");
        if (t.annotations.frame_class != FrameClass::None)
          flag(d.id, ti, "annotation.frame_class.speaker",
               "frame_class set on a system turn");
        if (t.annotations.recovered)
          flag(d.id, ti, "annotation.recovered.speaker",
               "recovered set on a system turn");
      } else {
        if (!t.ref_frame)
          flag(d.id, ti, "turn.user.frames", "user turn lacks ref_frame");
        if (!t.hyp_frame)
          flag(d.id, ti, "turn.user.frames", "user turn lacks hyp_frame");
        if (t.system_act)
          flag(d.id, ti, "turn.user.act", "user turn carries a system_act");
        if (t.annotations.ca_tag != CaTag::None)
          flag(d.id, ti, "annotation.ca_tag.speaker",
               "ca_tag set on a user turn");
        if (t.annotations.recovered &&
            t.annotations.frame_class != FrameClass::Partial)
          flag(d.id, ti, "annotation.recovered.class",
               "recovered set on a turn whose frame_class is not PARTIAL");
      }
      for (const auto* frame : {&t.ref_frame, &t.hyp_frame}) {
        if (!*frame) continue;
        if (auto conf = (*frame)->value(Slot::Confirmation);
            conf && *conf != "YES" && *conf != "NO")
          flag(d.id, ti, "concept.confirmation.value",
               "confirmation concept must be YES or NO, got '" + *conf + "'");
      }
      duration_sum += t.duration_ds;
    }
    if (duration_sum != d.synthetic_duration_ds)
      flag(d.id, -1, "dialogue.duration.sum",
           "synthetic_duration does not equal the sum of turn durations");
  }
  return out;
}

inline std::vector<Violation> validate_corpus(const Corpus& corpus,
                                              const ScenarioSet& scenarios) {
  std::vector<Violation> out = validate_corpus(corpus);
  for (const auto& d : corpus.dialogues) {
    if (!scenarios.count(d.scenario_id))
      out.push_back({d.id, -1, "dialogue.scenario.resolves",
                     "scenario id '" + d.scenario_id + "' does not resolve"});
  }
  return out;
}

inline Corpus corpus_from_string(const std::string& text) {
  using namespace io_detail;
  Corpus corpus;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Dialogue* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    const std::string kind = rec.value("record", "");
    if (kind == "corpus") {
      corpus.metadata.trial_label = rec.value("trial_label", "");
      corpus.metadata.config_digest = rec.value("config_digest", "");
      corpus.metadata.annotation_rules = rec.value("annotation_rules", "");
    } else if (kind == "dialogue") {
      Dialogue d;
      d.id = rec.value("id", "");
      if (d.id.empty()) throw ParseError("dialogue record lacks an id", line_no);
      d.scenario_id = rec.value("scenario_id", "");
      auto strat = strategy_from_name(rec.value("strategy", ""));
      if (!strat)
        throw ParseError("unknown strategy '" + rec.value("strategy", "") + "'",
                         line_no);
      d.strategy = *strat;
      d.seed = rec.value("seed", std::uint64_t{0});
      d.transaction_success = rec.value("transaction_success", false);
      d.synthetic_duration_ds =
          seconds_to_ds(rec.value("synthetic_duration", 0.0));
      corpus.dialogues.push_back(std::move(d));
      current = &corpus.dialogues.back();
    } else if (kind == "turn") {
      if (!current)
        throw ParseError("turn record before any dialogue header", line_no);
      Turn t;
      t.index = rec.value("index", 0);
      auto speaker = speaker_from_name(rec.value("speaker", ""));
      if (!speaker)
        throw ParseError("unknown speaker '" + rec.value("speaker", "") + "'",
                         line_no);
      t.speaker = *speaker;
      if (rec.contains("words"))
        t.words = rec["words"].get<std::vector<std::string>>();
      if (rec.contains("hyp_words"))
        t.hyp_words = rec["hyp_words"].get<std::vector<std::string>>();
      if (rec.contains("ref_frame"))
        t.ref_frame = frame_from_json(rec["ref_frame"], line_no);
      if (rec.contains("hyp_frame"))
        t.hyp_frame = frame_from_json(rec["hyp_frame"], line_no);
      if (rec.contains("system_act"))
        t.system_act = act_from_json(rec["system_act"], line_no);
      if (rec.contains("annotations"))
        t.annotations = annotations_from_json(rec["annotations"], line_no);
      t.duration_ds = seconds_to_ds(rec.value("duration", 0.0));
      current->turns.push_back(std::move(t));
    } else {
      throw ParseError("unknown record kind '" + kind + "'", line_no);
    }
  }
  if (auto violations = validate_corpus(corpus); !violations.empty()) {
    const auto& v = violations.front();
    std::string where = "dialogue '" + v.dialogue_id + "'";
    if (v.turn_index >= 0) where += " turn " + std::to_string(v.turn_index);
    throw ValidationError("corpus invalid (" +
                          std::to_string(violations.size()) + " violation" +
                          (violations.size() == 1 ? "" : "s") + "); first: " +
                          v.rule + " at " + where + ": " + v.message);
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return corpus_from_string(buf.str());
}

inline void save_corpus(const Corpus& corpus,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file '" + path.string() + "'");
  out << corpus_to_string(corpus);
  if (!out) throw Error("I/O failure writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Scenario files: one scenario record per line.
// ---------------------------------------------------------------------------

inline std::string scenarios_to_string(const std::vector<Scenario>& list) {
  std::ostringstream out;
  for (const auto& s : list) {
    json rec = json::object();
    rec["record"] = "scenario";
    rec["id"] = s.id;
    rec["departure_city"] = s.departure_city;
    rec["arrival_city"] = s.arrival_city;
    rec["required_attributes"] =
        std::vector<std::string>(s.required_attributes.begin(),
                                 s.required_attributes.end());
    if (!s.optional_attributes.empty())
      rec["optional_attributes"] =
          std::vector<std::string>(s.optional_attributes.begin(),
                                   s.optional_attributes.end());
    rec["departure_time_preference"] = s.departure_time_preference;
    out << rec.dump() << '\n';
  }
  return out.str();
}

inline std::vector<Scenario> scenarios_from_string(const std::string& text) {
  std::vector<Scenario> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (rec.value("record", "") != "scenario")
      throw ParseError("expected a scenario record", line_no);
    Scenario s;
    s.id = rec.value("id", "");
    s.departure_city = rec.value("departure_city", "");
    s.arrival_city = rec.value("arrival_city", "");
    if (s.id.empty() || s.departure_city.empty() || s.arrival_city.empty())
      throw ParseError("scenario record is missing id or cities", line_no);
    if (s.departure_city == s.arrival_city)
      throw ParseError("scenario '" + s.id +
                           "' has equal departure and arrival cities",
                       line_no);
    if (rec.contains("required_attributes"))
      for (const auto& a : rec["required_attributes"])
        s.required_attributes.insert(a.get<std::string>());
    if (rec.contains("optional_attributes"))
      for (const auto& a : rec["optional_attributes"])
        s.optional_attributes.insert(a.get<std::string>());
    s.departure_time_preference =
        rec.value("departure_time_preference", "free");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Scenario> load_scenarios(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenarios_from_string(buf.str());
}

inline void save_scenarios(const std::vector<Scenario>& list,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write scenario file '" + path.string() + "'");
  out << scenarios_to_string(list);
}

}  // namespace dialeval
