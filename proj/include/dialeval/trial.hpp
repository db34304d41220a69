// Dialogue and trial runners. A dialogue is fully determined by
// (scenario, strategy, error model, cooperativeness, seed): one splitmix64
// stream drives the user draws and the channel draws in a fixed order. A
// trial derives per-dialogue seeds from the master seed with the
// documented stream-splitting rule, so two runs of the same configuration
// produce byte-identical corpora.
//
// The synthetic clock charges a fixed per-turn overhead plus a per-word
// cost (defaults 2.5 s and 0.4 s).

#pragma once

#include <cinttypes>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dialeval/annotate.hpp"
#include "dialeval/corpus_io.hpp"
#include "dialeval/dialogue_manager.hpp"
#include "dialeval/error_channel.hpp"
#include "dialeval/user_model.hpp"

namespace dialeval::sim {

struct ClockModel {
  int overhead_ds = 25;  // tenths of a second per turn
  int per_word_ds = 4;

  int turn_ds(std::size_t n_words) const {
    return overhead_ds + per_word_ds * static_cast<int>(n_words);
  }
  bool operator==(const ClockModel&) const = default;
};

struct SimConfig {
  DmConfig dm;
  ClockModel clock;

  bool operator==(const SimConfig&) const = default;
};

// Anything that maps a reference frame to a hypothesis frame; scripted
// channels in tests use this hook.
using ChannelFn =
    std::function<SemanticFrame(const SemanticFrame&, ChannelMode, SplitMix64&)>;

inline Dialogue run_dialogue_with_channel(const Scenario& scenario,
                                          Strategy strategy,
                                          const ChannelFn& channel,
                                          double cooperativeness,
                                          std::uint64_t seed,
                                          const TimetableDB& db,
                                          const SimConfig& config = {}) {
  SplitMix64 rng(seed);
  UserState user = make_user(scenario, cooperativeness, rng);
  DmState dm = make_dm_state(strategy, config.dm);

  Dialogue d;
  char idbuf[32];
  std::snprintf(idbuf, sizeof idbuf, "dlg-%016" PRIx64, seed);
  d.id = idbuf;
  d.scenario_id = scenario.id;
  d.strategy = strategy;
  d.seed = seed;

  SemanticFrame last_hyp;
  while (true) {
    DmStep step = dm_step(std::move(dm), last_hyp, db);
    dm = std::move(step.state);

    Turn st;
    st.index = static_cast<int>(d.turns.size());
    st.speaker = Speaker::System;
    st.words = step.words;
    st.system_act = step.act;
    st.duration_ds = config.clock.turn_ds(st.words.size());
    d.turns.push_back(std::move(st));

    if (dm.closed) break;
    // The cap cuts after a system turn so every user turn keeps a
    // following system turn; capped dialogues fail their transaction.
    if (static_cast<int>(d.turns.size()) >= config.dm.turn_cap - 1) break;

    UserStep us = user_step(std::move(user), step.act, rng);
    user = std::move(us.state);
    const ChannelMode mode = us.style.compliant_isolated
                                 ? step.act.listen_mode
                                 : ChannelMode::Continuous;
    const SemanticFrame hyp = channel(us.intent, mode, rng);

    Turn ut;
    ut.index = static_cast<int>(d.turns.size());
    ut.speaker = Speaker::User;
    ut.words = user_realize(us.realize_act, us.intent, us.style);
    ut.hyp_words = user_realize(us.realize_act, hyp, us.style);
    ut.ref_frame = us.intent;
    ut.hyp_frame = hyp;
    ut.duration_ds = config.clock.turn_ds(ut.words.size());
    d.turns.push_back(std::move(ut));

    last_hyp = hyp;
  }

  int total = 0;
  for (const auto& t : d.turns) total += t.duration_ds;
  d.synthetic_duration_ds = total;
  d.transaction_success = annotate::derive_transaction_success(d, scenario);
  return d;
}

inline Dialogue run_dialogue(const Scenario& scenario, Strategy strategy,
                             const ErrorModel& model, double cooperativeness,
                             std::uint64_t seed, const TimetableDB& db,
                             const SimConfig& config = {}) {
  model.validate();
  ChannelFn channel = [&model](const SemanticFrame& ref, ChannelMode mode,
                               SplitMix64& rng) {
    return corrupt_frame(ref, model, mode, rng);
  };
  return run_dialogue_with_channel(scenario, strategy, channel,
                                   cooperativeness, seed, db, config);
}

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

// Scenarios whose requirements both strategies can deliver.
inline std::vector<Scenario> bundled_scenarios_basic() {
  auto mk = [](std::string id, std::string dep, std::string arr,
               std::set<std::string> required, std::string pref) {
    Scenario s;
    s.id = std::move(id);
    s.departure_city = std::move(dep);
    s.arrival_city = std::move(arr);
    s.required_attributes = std::move(required);
    s.departure_time_preference = std::move(pref);
    return s;
  };
  return {
      mk("s01", "TORINO", "MILANO", {attr::kTimes}, "EVENING"),
      mk("s02", "MILANO", "ROMA", {attr::kTimes}, "EVENING"),
      mk("s03", "ROMA", "MILANO", {attr::kTimes}, "MORNING"),
      mk("s04", "MILANO", "TORINO", {attr::kTimes, attr::kTrainType}, "free"),
      mk("s05", "BOLOGNA", "FIRENZE", {attr::kTimes}, "free"),
      mk("s06", "ROMA", "NAPOLI", {attr::kTimes, attr::kTrainType}, "free"),
      mk("s07", "MILANO", "VENEZIA", {attr::kTimes}, "AFTERNOON"),
      mk("s08", "TORINO", "GENOVA", {attr::kTimes, attr::kTrainType}, "free"),
  };
}

// The full set adds scenarios that require train-service information,
// which only D1 can provide.
inline std::vector<Scenario> bundled_scenarios_full() {
  auto mk = [](std::string id, std::string dep, std::string arr,
               std::set<std::string> required,
               std::set<std::string> optional_attrs, std::string pref) {
    Scenario s;
    s.id = std::move(id);
    s.departure_city = std::move(dep);
    s.arrival_city = std::move(arr);
    s.required_attributes = std::move(required);
    s.optional_attributes = std::move(optional_attrs);
    s.departure_time_preference = std::move(pref);
    return s;
  };
  std::vector<Scenario> out = bundled_scenarios_basic();
  out.push_back(mk("s09", "TORINO", "MILANO",
                   {attr::kTimes, attr::kRestaurant, attr::kCost}, {},
                   "EVENING"));
  out.push_back(mk("s10", "MILANO", "ROMA",
                   {attr::kTimes, attr::kSleepingCar}, {attr::kCost},
                   "EVENING"));
  out.push_back(
      mk("s11", "ROMA", "FIRENZE", {attr::kTimes, attr::kCost}, {}, "free"));
  out.push_back(mk("s12", "NAPOLI", "BARI",
                   {attr::kTimes, attr::kReservation}, {}, "free"));
  out.push_back(mk("s13", "MILANO", "BOLOGNA",
                   {attr::kTimes, attr::kRestaurant}, {}, "MORNING"));
  out.push_back(mk("s14", "VERONA", "VENEZIA",
                   {attr::kTimes, attr::kCost, attr::kReservation}, {},
                   "free"));
  out.push_back(mk("s15", "MILANO", "GENOVA",
                   {attr::kTimes, attr::kTrainType, attr::kCost}, {}, "free"));
  out.push_back(mk("s16", "ROMA", "MILANO",
                   {attr::kTimes, attr::kSleepingCar, attr::kCost}, {},
                   "EVENING"));
  return out;
}

// ---------------------------------------------------------------------------
// Trial configuration
// ---------------------------------------------------------------------------

struct TrialConfig {
  std::string label = "trial";
  int n_dialogues = 0;
  std::string strategies = "both";  // d1 | d2 | both
  double p_sub = -1;                // negative = use the tuned default
  double p_del = -1;
  double p_ins = -1;
  double p_fail = -1;
  double isolated_word_factor = -1;
  double spelling_factor = -1;
  std::vector<double> cooperativeness = {0.7};
  std::string scenario_file;   // empty = bundled full set
  std::string timetable_file;  // empty = built-in timetable
  std::uint64_t master_seed = 1;
  int turn_cap = 60;
  int d1_mode_switch_after = 2;
  int clock_overhead_ds = 25;
  int clock_per_word_ds = 4;

  void validate() const {
    if (n_dialogues <= 0) throw Error("trial config: n_dialogues must be > 0");
    if (strategies != "d1" && strategies != "d2" && strategies != "both")
      throw Error("trial config: strategies must be d1, d2 or both");
    if (cooperativeness.empty())
      throw Error("trial config: cooperativeness must not be empty");
    for (double c : cooperativeness)
      if (c < 0.0 || c > 1.0)
        throw Error("trial config: cooperativeness values must be in [0,1]");
    if (turn_cap < 4) throw Error("trial config: turn_cap too small");
  }

  ErrorModel effective_model(const TimetableDB& db) const {
    ErrorModel m = ErrorModel::defaults(db);
    if (p_sub >= 0) m.p_sub = p_sub;
    if (p_del >= 0) m.p_del = p_del;
    if (p_ins >= 0) m.p_ins = p_ins;
    if (p_fail >= 0) m.p_fail = p_fail;
    if (isolated_word_factor >= 0) m.isolated_word_factor = isolated_word_factor;
    if (spelling_factor >= 0) m.spelling_factor = spelling_factor;
    m.validate();
    return m;
  }

  SimConfig sim_config() const {
    SimConfig c;
    c.dm.turn_cap = turn_cap;
    c.dm.d1_mode_switch_after = d1_mode_switch_after;
    c.clock.overhead_ds = clock_overhead_ds;
    c.clock.per_word_ds = clock_per_word_ds;
    return c;
  }

  // Canonical key=value rendering; the digest is the FNV-1a of this text,
  // so equal effective configurations share a digest.
  std::string canonical() const {
    std::ostringstream out;
    out << "clock_overhead_ds = " << clock_overhead_ds << '\n';
    out << "clock_per_word_ds = " << clock_per_word_ds << '\n';
    out << "cooperativeness = ";
    for (std::size_t i = 0; i < cooperativeness.size(); ++i)
      out << (i ? "," : "") << report_double(cooperativeness[i]);
    out << '\n';
    out << "d1_mode_switch_after = " << d1_mode_switch_after << '\n';
    out << "isolated_word_factor = " << report_double(isolated_word_factor)
        << '\n';
    out << "label = " << label << '\n';
    out << "master_seed = " << master_seed << '\n';
    out << "n_dialogues = " << n_dialogues << '\n';
    out << "p_del = " << report_double(p_del) << '\n';
    out << "p_fail = " << report_double(p_fail) << '\n';
    out << "p_ins = " << report_double(p_ins) << '\n';
    out << "p_sub = " << report_double(p_sub) << '\n';
    out << "scenario_file = " << scenario_file << '\n';
    out << "spelling_factor = " << report_double(spelling_factor) << '\n';
    out << "strategies = " << strategies << '\n';
    out << "timetable_file = " << timetable_file << '\n';
    out << "turn_cap = " << turn_cap << '\n';
    return out.str();
  }

  std::string digest() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(canonical()));
    return buf;
  }

 private:
  static std::string report_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }
};

// Flat key = value document; # starts a comment.
inline TrialConfig parse_trial_config(const std::string& text) {
  TrialConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw ParseError("expected key = value", line_no);
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "label") c.label = value;
      else if (key == "n_dialogues") c.n_dialogues = std::stoi(value);
      else if (key == "strategies") c.strategies = value;
      else if (key == "p_sub") c.p_sub = std::stod(value);
      else if (key == "p_del") c.p_del = std::stod(value);
      else if (key == "p_ins") c.p_ins = std::stod(value);
      else if (key == "p_fail") c.p_fail = std::stod(value);
      else if (key == "isolated_word_factor") c.isolated_word_factor = std::stod(value);
      else if (key == "spelling_factor") c.spelling_factor = std::stod(value);
      else if (key == "cooperativeness") {
        c.cooperativeness.clear();
        std::istringstream vs(value);
        std::string item;
        while (std::getline(vs, item, ','))
          c.cooperativeness.push_back(std::stod(item));
      } else if (key == "scenario_file") c.scenario_file = value;
      else if (key == "timetable_file") c.timetable_file = value;
      else if (key == "master_seed") c.master_seed = std::stoull(value);
      else if (key == "turn_cap") c.turn_cap = std::stoi(value);
      else if (key == "d1_mode_switch_after") c.d1_mode_switch_after = std::stoi(value);
      else if (key == "clock_overhead_ds") c.clock_overhead_ds = std::stoi(value);
      else if (key == "clock_per_word_ds") c.clock_per_word_ds = std::stoi(value);
      else throw ParseError("unknown key '" + key + "'", line_no);
    } catch (const std::invalid_argument&) {
      throw ParseError("bad value for '" + key + "'", line_no);
    } catch (const std::out_of_range&) {
      throw ParseError("value out of range for '" + key + "'", line_no);
    }
  }
  return c;
}

inline TrialConfig load_trial_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trial config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trial_config(buf.str());
}

// ---------------------------------------------------------------------------
// Trial runner
// ---------------------------------------------------------------------------

inline Corpus run_trial(const TrialConfig& config, const TimetableDB& db,
                        const std::vector<Scenario>& scenarios,
                        const annotate::AnnotationRules& rules = {}) {
  config.validate();
  if (scenarios.empty()) throw Error("run_trial: no scenarios");
  for (const auto& s : scenarios) {
    if (!db.has_route(s.departure_city, s.arrival_city))
      throw Error("run_trial: scenario '" + s.id + "' route " +
                  s.departure_city + " -> " + s.arrival_city +
                  " is not in the timetable");
  }
  const ErrorModel model = config.effective_model(db);
  const SimConfig sim_config = config.sim_config();
  const bool both = config.strategies == "both";

  Corpus corpus;
  corpus.metadata.trial_label = config.label;
  corpus.metadata.config_digest = config.digest();

  for (int i = 0; i < config.n_dialogues; ++i) {
    const Strategy strategy =
        both ? (i % 2 == 0 ? Strategy::D1 : Strategy::D2)
             : (config.strategies == "d1" ? Strategy::D1 : Strategy::D2);
    const int pair_index = both ? i / 2 : i;
    const Scenario& scenario =
        scenarios[static_cast<std::size_t>(pair_index) % scenarios.size()];
    const double coop =
        config.cooperativeness[static_cast<std::size_t>(pair_index) %
                               config.cooperativeness.size()];
    const std::uint64_t seed =
        SplitMix64::stream_seed(config.master_seed, static_cast<std::uint64_t>(i));
    Dialogue d = run_dialogue(scenario, strategy, model, coop, seed, db,
                              sim_config);
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "d%05d", i + 1);
    d.id = idbuf;
    d = annotate::auto_annotate(std::move(d), scenario, rules);
    corpus.dialogues.push_back(std::move(d));
  }
  corpus.metadata.annotation_rules = rules.version;
  return corpus;
}

// Convenience wrapper resolving the timetable and scenarios named by the
// configuration (built-in defaults when unset).
inline Corpus run_trial(const TrialConfig& config) {
  const TimetableDB db = config.timetable_file.empty()
                             ? TimetableDB::builtin()
                             : TimetableDB::load_file(config.timetable_file);
  const std::vector<Scenario> scenarios =
      config.scenario_file.empty() ? bundled_scenarios_full()
                                   : load_scenarios(config.scenario_file);
  return run_trial(config, db, scenarios);
}

}  // namespace dialeval::sim
