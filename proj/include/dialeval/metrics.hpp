// Corpus-level metrics. Every ratio is kept as exact counts and only
// rendered as a rounded percentage at output time.
//
// Denominators: UTC% is over user turns, STC% over system turns, TCR over
// all turns including greetings and closings. Implicit recovery with an
// empty denominator is NO_DATA, never 0 or 100 — "no errors occurred" and
// "no errors were recovered" must stay distinguishable.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialeval/alignment.hpp"
#include "dialeval/types.hpp"

namespace dialeval::metrics {

struct Rate {
  long num = 0;
  long den = 0;

  bool has_value() const { return den > 0; }
  double pct() const {
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
  }
  std::optional<double> pct_or_nodata() const {
    if (!has_value()) return std::nullopt;
    return pct();
  }
};

// Accumulated insertion/deletion/substitution counts for the accuracy
// formula (word accuracy and conceptual accuracy).
struct ErrorCounts {
  long correct = 0;
  long insertions = 0;
  long deletions = 0;
  long substitutions = 0;
  long ref_len = 0;

  bool has_value() const { return ref_len > 0; }
  double accuracy_pct() const {
    return 100.0 *
           static_cast<double>(ref_len - insertions - deletions -
                               substitutions) /
           static_cast<double>(ref_len);
  }
  void add(const align::AlignmentResult& a) {
    correct += a.correct;
    insertions += a.insertions;
    deletions += a.deletions;
    substitutions += a.substitutions;
    ref_len += a.ref_len;
  }
};

struct StrategyReport {
  std::string label;  // "D1", "D2" or "ALL"
  long n_dialogues = 0;
  long n_turns = 0;
  long n_user_utterances = 0;
  long n_system_turns = 0;
  long total_user_words = 0;
  long total_duration_ds = 0;

  ErrorCounts wa;     // word accuracy counts
  ErrorCounts con_a;  // conceptual accuracy counts
  Rate su;            // fully understood user utterances
  Rate ca_ap, ca_ia, ca_am;
  Rate utc, stc;
  Rate ir;
  Rate ts;
  Rate tcr;

  bool has_dialogues() const { return n_dialogues > 0; }
  std::optional<double> avg_words_per_utterance() const {
    if (n_user_utterances == 0) return std::nullopt;
    return static_cast<double>(total_user_words) /
           static_cast<double>(n_user_utterances);
  }
  std::optional<double> avg_turns() const {
    if (n_dialogues == 0) return std::nullopt;
    return static_cast<double>(n_turns) / static_cast<double>(n_dialogues);
  }
  std::optional<double> avg_duration_s() const {
    if (n_dialogues == 0) return std::nullopt;
    return static_cast<double>(total_duration_ds) / 10.0 /
           static_cast<double>(n_dialogues);
  }
};

struct MetricsReport {
  std::string trial_label;
  std::vector<StrategyReport> rows;  // D1, D2, ALL

  const StrategyReport* row(std::string_view label) const {
    for (const auto& r : rows)
      if (r.label == label) return &r;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Individual metrics
// ---------------------------------------------------------------------------

namespace metrics_detail {

inline void require_annotated_system_turn(const Dialogue& d, const Turn& t) {
  if (t.annotations.ca_tag == CaTag::None)
    throw Error("system turn " + std::to_string(t.index) + " of dialogue '" +
                d.id + "' carries no CA tag");
}

inline void require_classified_user_turn(const Dialogue& d, const Turn& t) {
  if (t.annotations.frame_class == FrameClass::None)
    throw Error("user turn " + std::to_string(t.index) + " of dialogue '" +
                d.id + "' carries no frame classification");
}

}  // namespace metrics_detail

// Three-valued contextual appropriateness tally: (AP%, IA%, AM%) over the
// tagged system turns. Untagged system turns are an error.
inline std::array<double, 3> tally_ca(const Corpus& corpus) {
  long ap = 0, ia = 0, am = 0, total = 0;
  std::vector<std::string> untagged;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      if (t.speaker != Speaker::System) continue;
      switch (t.annotations.ca_tag) {
        case CaTag::AP: ++ap; ++total; break;
        case CaTag::IA: ++ia; ++total; break;
        case CaTag::AM: ++am; ++total; break;
        case CaTag::None:
          untagged.push_back(d.id + "#" + std::to_string(t.index));
          break;
      }
    }
  }
  if (!untagged.empty()) {
    std::string list;
    for (std::size_t i = 0; i < untagged.size() && i < 8; ++i)
      list += (i ? ", " : "") + untagged[i];
    if (untagged.size() > 8) list += ", ...";
    throw Error("untagged system turns: " + list);
  }
  if (total == 0) throw Error("tally_ca: no tagged system turns");
  const double n = static_cast<double>(total);
  return {100.0 * ap / n, 100.0 * ia / n, 100.0 * am / n};
}

// Percentage of partially failed utterances the dialogue manager regained;
// std::nullopt (NO_DATA) when no utterance failed partially.
inline std::optional<double> implicit_recovery(const Corpus& corpus) {
  long partial = 0, recovered = 0;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      if (t.speaker != Speaker::User) continue;
      metrics_detail::require_classified_user_turn(d, t);
      if (t.annotations.frame_class != FrameClass::Partial) continue;
      if (!t.annotations.recovered)
        throw Error("PARTIAL user turn " + std::to_string(t.index) +
                    " of dialogue '" + d.id + "' has no recovery verdict");
      ++partial;
      if (*t.annotations.recovered) ++recovered;
    }
  }
  if (partial == 0) return std::nullopt;
  return 100.0 * static_cast<double>(recovered) /
         static_cast<double>(partial);
}

// (UTC%, STC%): user corrections over user turns, system corrections over
// system turns.
inline std::pair<double, double> explicit_recovery(const Corpus& corpus) {
  long users = 0, systems = 0, utc = 0, stc = 0;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      if (t.speaker == Speaker::User) {
        ++users;
        if (t.annotations.correction == Correction::Utc) ++utc;
      } else {
        ++systems;
        if (t.annotations.correction == Correction::Stc) ++stc;
      }
    }
  }
  if (users == 0 || systems == 0)
    throw Error("explicit_recovery: empty corpus");
  return {100.0 * static_cast<double>(utc) / static_cast<double>(users),
          100.0 * static_cast<double>(stc) / static_cast<double>(systems)};
}

// Correction turns (both sides) over all turns.
inline double turn_correction_ratio(const Corpus& corpus) {
  long turns = 0, corrections = 0;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      ++turns;
      if (t.annotations.correction != Correction::Normal) ++corrections;
    }
  }
  if (turns == 0) throw Error("turn_correction_ratio: empty corpus");
  return 100.0 * static_cast<double>(corrections) /
         static_cast<double>(turns);
}

inline double transaction_success(const Corpus& corpus) {
  if (corpus.dialogues.empty())
    throw Error("transaction_success: empty corpus");
  long ok = 0;
  for (const auto& d : corpus.dialogues)
    if (d.transaction_success) ++ok;
  return 100.0 * static_cast<double>(ok) /
         static_cast<double>(corpus.dialogues.size());
}

struct TurnLabel {
  std::string dialogue_id;
  int turn_index = 0;
  Correction label = Correction::Normal;
};

// Per-turn NORMAL/STC/UTC labels. Turns that are neither correction kind
// are normal turns: appropriate directives, the introductory message,
// diagnostics and correct answers on the system side; information requests
// and answers to directives on the user side.
inline std::vector<TurnLabel> classify_normal_turns(const Corpus& corpus) {
  std::vector<TurnLabel> out;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      if (t.speaker == Speaker::System) {
        if (!t.system_act)
          throw Error("classify_normal_turns: system turn without an act");
        metrics_detail::require_annotated_system_turn(d, t);
      }
      out.push_back({d.id, t.index, t.annotations.correction});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report builder
// ---------------------------------------------------------------------------

inline MetricsReport build_report(const Corpus& corpus) {
  MetricsReport report;
  report.trial_label = corpus.metadata.trial_label;
  report.rows.resize(3);
  report.rows[0].label = "D1";
  report.rows[1].label = "D2";
  report.rows[2].label = "ALL";

  auto rows_for = [&report](Strategy s) {
    return std::array<StrategyReport*, 2>{
        &report.rows[s == Strategy::D1 ? 0 : 1], &report.rows[2]};
  };

  for (const auto& d : corpus.dialogues) {
    for (StrategyReport* r : rows_for(d.strategy)) {
      ++r->n_dialogues;
      r->n_turns += static_cast<long>(d.turns.size());
      r->total_duration_ds += d.synthetic_duration_ds;
      r->ts.den += 1;
      r->ts.num += d.transaction_success ? 1 : 0;
    }
    for (const auto& t : d.turns) {
      const bool correction = t.annotations.correction != Correction::Normal;
      if (t.speaker == Speaker::User) {
        if (!t.ref_frame || !t.hyp_frame)
          throw Error("build_report: user turn without frames in dialogue '" +
                      d.id + "'");
        metrics_detail::require_classified_user_turn(d, t);
        const auto word_alignment = align::align_words(t.words, t.hyp_words);
        const auto frame_diff =
            align::diff_frames(*t.ref_frame, *t.hyp_frame);
        for (StrategyReport* r : rows_for(d.strategy)) {
          ++r->n_user_utterances;
          r->total_user_words += static_cast<long>(t.words.size());
          r->wa.add(word_alignment);
          r->con_a.add(frame_diff);
          r->su.den += 1;
          if (t.annotations.frame_class == FrameClass::Correct)
            r->su.num += 1;
          r->utc.den += 1;
          if (t.annotations.correction == Correction::Utc) r->utc.num += 1;
          if (t.annotations.frame_class == FrameClass::Partial) {
            if (!t.annotations.recovered)
              throw Error("build_report: PARTIAL turn without a recovery "
                          "verdict in dialogue '" + d.id + "'");
            r->ir.den += 1;
            if (*t.annotations.recovered) r->ir.num += 1;
          }
          r->tcr.den += 1;
          if (correction) r->tcr.num += 1;
        }
      } else {
        metrics_detail::require_annotated_system_turn(d, t);
        for (StrategyReport* r : rows_for(d.strategy)) {
          ++r->n_system_turns;
          switch (t.annotations.ca_tag) {
            case CaTag::AP: r->ca_ap.num += 1; break;
            case CaTag::IA: r->ca_ia.num += 1; break;
            case CaTag::AM: r->ca_am.num += 1; break;
            case CaTag::None: break;
          }
          r->ca_ap.den += 1;
          r->ca_ia.den += 1;
          r->ca_am.den += 1;
          r->stc.den += 1;
          if (t.annotations.correction == Correction::Stc) r->stc.num += 1;
          r->tcr.den += 1;
          if (correction) r->tcr.num += 1;
        }
      }
    }
  }
  return report;
}

}  // namespace dialeval::metrics
