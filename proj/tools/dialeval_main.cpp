// dialeval — run simulated trials, evaluate annotated corpora, inspect
// alignments, re-render reports, and talk to the dialogue managers from
// the console.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "dialeval/dialeval.hpp"

namespace {

using namespace dialeval;

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Frame syntax: comma-separated slot=value pairs; bare "yes"/"no" are
// confirmation shortcuts; "-" or an empty string is the empty frame.
SemanticFrame parse_frame_text(const std::string& text) {
  SemanticFrame f;
  std::string trimmed;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c)) || !trimmed.empty())
      trimmed += c;
  while (!trimmed.empty() &&
         std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.pop_back();
  if (trimmed.empty() || trimmed == "-") return f;

  std::istringstream in(trimmed);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, e - b + 1);
    std::string lower;
    for (char c : item)
      lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "yes" || lower == "no") {
      f.set(Slot::Confirmation, lower == "yes" ? "YES" : "NO");
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Error("cannot parse concept '" + item +
                  "' (expected slot=value, yes or no)");
    const std::string slot_text = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    auto slot = slot_from_name(slot_text);
    if (!slot) throw Error("unknown slot '" + slot_text + "'");
    for (auto& c : value)
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (value == "?") value = kQueryValue;
    f.set(*slot, value);
  }
  return f;
}

std::string frame_text(const SemanticFrame& f) {
  if (f.empty()) return "<empty>";
  std::string out = "<";
  bool first = true;
  for (const auto& [slot, value] : f.concepts()) {
    if (!first) out += ", ";
    first = false;
    out += std::string(slot_name(slot)) + "=" + value;
  }
  return out + ">";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("I/O failure writing '" + path + "'");
}

std::string describe_act(const SystemAct& act) {
  std::string out = std::string(act_name(act.type));
  if (act.slot) out += " " + std::string(slot_name(*act.slot));
  if (!act.items.empty()) {
    out += " [";
    for (std::size_t i = 0; i < act.items.size(); ++i) {
      if (i) out += ", ";
      out += std::string(slot_name(act.items[i].slot)) + "=" +
             act.items[i].value;
    }
    out += "]";
  }
  if (!act.embedded.empty()) {
    out += " embedding [";
    for (std::size_t i = 0; i < act.embedded.size(); ++i) {
      if (i) out += ", ";
      out += std::string(slot_name(act.embedded[i].slot)) + "=" +
             act.embedded[i].value;
    }
    out += "]";
  }
  if (act.listen_mode != ChannelMode::Continuous)
    out += " (" + std::string(channel_mode_name(act.listen_mode)) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override) {
  sim::TrialConfig config = sim::load_trial_config(config_path);
  if (seed_override) config.master_seed = *seed_override;
  const Corpus corpus = sim::run_trial(config);
  save_corpus(corpus, out_path);

  std::ostringstream manifest;
  manifest << "{\"config_digest\":\"" << config.digest() << "\""
           << ",\"master_seed\":" << config.master_seed
           << ",\"n_dialogues\":" << config.n_dialogues
           << ",\"record\":\"manifest\""
           << ",\"rule_set\":\"" << corpus.metadata.annotation_rules << "\"}\n";
  write_text_file(out_path + ".manifest", manifest.str());
  std::cout << "wrote " << corpus.dialogues.size() << " dialogues to "
            << out_path << " (config digest " << config.digest() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / report
// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& in_path, const std::string& format,
                 const std::string& strategy_filter,
                 const std::string& out_path, bool annotate_first,
                 const std::string& scenario_path) {
  Corpus corpus = load_corpus(in_path);
  if (annotate_first) {
    const std::vector<Scenario> scenarios =
        scenario_path.empty() ? sim::bundled_scenarios_full()
                              : load_scenarios(scenario_path);
    corpus = annotate::auto_annotate_corpus(std::move(corpus),
                                            make_scenario_set(scenarios));
  }
  if (strategy_filter != "both") {
    const Strategy keep = *strategy_from_name(strategy_filter);
    std::erase_if(corpus.dialogues, [keep](const Dialogue& d) {
      return d.strategy != keep;
    });
  }
  const metrics::MetricsReport report = metrics::build_report(corpus);
  const std::string text = format == "machine"
                               ? report::render_machine(report)
                               : report::render_text(report);
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw Error("cannot open metrics file '" + in_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string trial_label;
  const auto cells = report::parse_machine(buf.str(), &trial_label);
  const std::string text = report::render_text(cells, trial_label);
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
  return 0;
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

int cmd_align(const std::string& ref_words, const std::string& hyp_words,
              const std::string& ref_frame, const std::string& hyp_frame) {
  const bool word_mode = !ref_words.empty() || !hyp_words.empty();
  const bool frame_mode = !ref_frame.empty() || !hyp_frame.empty();
  if (word_mode == frame_mode)
    throw Error("align needs either --ref/--hyp or --ref-frame/--hyp-frame");

  align::AlignmentResult r;
  if (word_mode) {
    const auto ref = split_words(ref_words);
    const auto hyp = split_words(hyp_words);
    r = align::align_words(ref, hyp);
    std::printf("%-16s %-16s %s\n", "REF", "HYP", "OP");
    for (const auto& op : r.script) {
      const std::string rw = op.ref_index >= 0 ? ref[op.ref_index] : "-";
      const std::string hw = op.hyp_index >= 0 ? hyp[op.hyp_index] : "-";
      std::printf("%-16s %-16s %s\n", rw.c_str(), hw.c_str(),
                  std::string(align::edit_kind_name(op.kind)).c_str());
    }
  } else {
    r = align::diff_frames(parse_frame_text(ref_frame),
                           parse_frame_text(hyp_frame));
    std::printf("%-22s %-12s %-12s %s\n", "SLOT", "REF", "HYP", "VERDICT");
    for (const auto& v : r.verdicts)
      std::printf("%-22s %-12s %-12s %s\n",
                  std::string(slot_name(v.slot)).c_str(),
                  v.ref_value.empty() ? "-" : v.ref_value.c_str(),
                  v.hyp_value.empty() ? "-" : v.hyp_value.c_str(),
                  std::string(align::edit_kind_name(v.kind)).c_str());
  }
  std::printf("C=%ld I=%ld D=%ld S=%ld N=%ld\n", r.correct, r.insertions,
              r.deletions, r.substitutions, r.ref_len);
  if (r.ref_len > 0)
    std::printf("accuracy: %s\n",
                report::format_fixed1(align::accuracy(r)).c_str());
  else
    std::printf("accuracy: undefined (empty reference)\n");
  return 0;
}

// ---------------------------------------------------------------------------
// interact
// ---------------------------------------------------------------------------

int cmd_interact(const std::string& strategy_text,
                 const std::string& scenario_path,
                 const std::string& scenario_id, const std::string& out_path,
                 std::uint64_t seed, double p_sub, double p_del, double p_ins,
                 double p_fail) {
  const Strategy strategy = *strategy_from_name(strategy_text);
  const auto db = sim::TimetableDB::builtin();
  const std::vector<Scenario> scenarios =
      scenario_path.empty() ? sim::bundled_scenarios_full()
                            : load_scenarios(scenario_path);
  const ScenarioSet scenario_set = make_scenario_set(scenarios);
  auto sit = scenario_set.find(scenario_id);
  if (sit == scenario_set.end())
    throw Error("unknown scenario '" + scenario_id + "'");
  const Scenario& scenario = sit->second;

  sim::ErrorModel model;
  model.p_sub = p_sub;
  model.p_del = p_del;
  model.p_ins = p_ins;
  model.p_fail = p_fail;
  model.fill_confusions(db);
  model.validate();
  SplitMix64 rng(seed);
  const sim::ClockModel clock;

  std::cout << "scenario " << scenario.id << ": "
            << scenario.departure_city << " -> " << scenario.arrival_city
            << " (" << scenario.departure_time_preference
            << "); type frames like departure-city=roma, arrival-city=milano"
            << "\nyes/no answer confirmations; empty line = not understood;"
            << " quit abandons the dialogue\n";

  sim::DmState dm = sim::make_dm_state(strategy);
  Dialogue d;
  d.scenario_id = scenario.id;
  d.strategy = strategy;
  d.seed = seed;

  SemanticFrame last_hyp;
  bool aborted = false;
  while (true) {
    sim::DmStep step = sim::dm_step(std::move(dm), last_hyp, db);
    dm = std::move(step.state);
    Turn st;
    st.index = static_cast<int>(d.turns.size());
    st.speaker = Speaker::System;
    st.words = step.words;
    st.system_act = step.act;
    st.duration_ds = clock.turn_ds(st.words.size());
    std::cout << "S" << (st.index / 2 + 1) << " [" << describe_act(step.act)
              << "]: ";
    for (const auto& w : st.words) std::cout << w << ' ';
    std::cout << '\n';
    d.turns.push_back(std::move(st));
    if (dm.closed) break;

    SemanticFrame ref;
    bool got = false;
    while (!got) {
      std::cout << "U> " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line)) {
        aborted = true;
        break;
      }
      if (line == "quit" || line == "q") {
        aborted = true;
        break;
      }
      try {
        ref = parse_frame_text(line);
        got = true;
      } catch (const Error& e) {
        std::cout << "  ! " << e.what() << '\n';
      }
    }
    if (aborted) break;

    const SemanticFrame hyp =
        sim::corrupt_frame(ref, model, step.act.listen_mode, rng);
    if (!(hyp == ref)) std::cout << "  (heard " << frame_text(hyp) << ")\n";
    Turn ut;
    ut.index = static_cast<int>(d.turns.size());
    ut.speaker = Speaker::User;
    ut.words = sim::user_realize(step.act, ref, sim::UserStyle{});
    ut.hyp_words = sim::user_realize(step.act, hyp, sim::UserStyle{});
    ut.ref_frame = ref;
    ut.hyp_frame = hyp;
    ut.duration_ds = clock.turn_ds(ut.words.size());
    d.turns.push_back(std::move(ut));
    last_hyp = hyp;
  }

  const long user_turns =
      std::count_if(d.turns.begin(), d.turns.end(), [](const Turn& t) {
        return t.speaker == Speaker::User;
      });
  if (aborted || user_turns == 0) {
    std::cout << "dialogue abandoned, nothing appended\n";
    return 0;
  }

  int total = 0;
  for (const auto& t : d.turns) total += t.duration_ds;
  d.synthetic_duration_ds = total;
  d = annotate::auto_annotate(std::move(d), scenario);

  Corpus corpus;
  if (std::filesystem::exists(out_path)) corpus = load_corpus(out_path);
  char idbuf[16];
  std::snprintf(idbuf, sizeof idbuf, "i%05d",
                static_cast<int>(corpus.dialogues.size()) + 1);
  d.id = idbuf;
  corpus.dialogues.push_back(std::move(d));
  save_corpus(corpus, out_path);
  std::cout << "appended dialogue " << idbuf << " to " << out_path
            << " (transaction "
            << (corpus.dialogues.back().transaction_success ? "succeeded"
                                                            : "failed")
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dialogue strategy evaluation workbench"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "run a simulated trial and write the corpus");
  std::string sim_config, sim_out = "corpus.jsonl";
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "trial configuration file")
      ->required();
  simulate->add_option("--out", sim_out, "corpus output file");
  std::uint64_t sim_seed_value = 0;
  auto* seed_opt =
      simulate->add_option("--seed", sim_seed_value, "master seed override");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "compute the metric report for a corpus");
  std::string eval_in, eval_format = "text", eval_strategy = "both",
              eval_out, eval_scenarios;
  bool eval_annotate = false;
  evaluate->add_option("--in", eval_in, "corpus file")->required();
  evaluate->add_option("--format", eval_format, "text or machine")
      ->check(CLI::IsMember({"text", "machine"}));
  evaluate->add_option("--strategy", eval_strategy, "d1, d2 or both")
      ->check(CLI::IsMember({"d1", "d2", "both"}));
  evaluate->add_option("--out", eval_out, "write the report here");
  evaluate->add_flag("--annotate", eval_annotate,
                     "run the auto-annotator before evaluating");
  evaluate->add_option("--scenarios", eval_scenarios,
                       "scenario file for --annotate");

  // align
  auto* align_cmd =
      app.add_subcommand("align", "debug word or frame alignments");
  std::string al_ref, al_hyp, al_ref_frame, al_hyp_frame;
  align_cmd->add_option("--ref", al_ref, "reference words");
  align_cmd->add_option("--hyp", al_hyp, "hypothesis words");
  align_cmd->add_option("--ref-frame", al_ref_frame, "reference frame");
  align_cmd->add_option("--hyp-frame", al_hyp_frame, "hypothesis frame");

  // report
  auto* report_cmd = app.add_subcommand(
      "report", "render a machine-format metrics file as text tables");
  std::string rep_in, rep_out;
  report_cmd->add_option("--in", rep_in, "machine metrics file")->required();
  report_cmd->add_option("--out", rep_out, "write the tables here");

  // interact
  auto* interact = app.add_subcommand(
      "interact", "play a scenario against a dialogue manager");
  std::string int_strategy = "d1", int_scenarios, int_scenario = "s01",
              int_out = "interactive.jsonl";
  std::uint64_t int_seed = 1;
  double int_p_sub = 0, int_p_del = 0, int_p_ins = 0, int_p_fail = 0;
  interact->add_option("--strategy", int_strategy, "d1 or d2")
      ->check(CLI::IsMember({"d1", "d2"}));
  interact->add_option("--scenarios", int_scenarios, "scenario file");
  interact->add_option("--scenario", int_scenario, "scenario id")->required();
  interact->add_option("--out", int_out, "corpus file to append to");
  interact->add_option("--seed", int_seed, "channel seed");
  interact->add_option("--p-sub", int_p_sub, "channel substitution rate");
  interact->add_option("--p-del", int_p_del, "channel deletion rate");
  interact->add_option("--p-ins", int_p_ins, "channel insertion rate");
  interact->add_option("--p-fail", int_p_fail, "channel total-failure rate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (seed_opt->count() > 0) sim_seed = sim_seed_value;
      return cmd_simulate(sim_config, sim_out, sim_seed);
    }
    if (evaluate->parsed())
      return cmd_evaluate(eval_in, eval_format, eval_strategy, eval_out,
                          eval_annotate, eval_scenarios);
    if (align_cmd->parsed())
      return cmd_align(al_ref, al_hyp, al_ref_frame, al_hyp_frame);
    if (report_cmd->parsed()) return cmd_report(rep_in, rep_out);
    if (interact->parsed())
      return cmd_interact(int_strategy, int_scenarios, int_scenario, int_out,
                          int_seed, int_p_sub, int_p_del, int_p_ins,
                          int_p_fail);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
