// Word-sequence alignment and concept-frame differencing.
//
// align_words is a minimal-cost Levenshtein alignment under unit costs for
// insertion, deletion and substitution. Ties are broken by preferring a
// substitution (or match) over a deletion over an insertion, so the edit
// script is deterministic. diff_frames compares frames slot by slot: frames
// are unordered, which makes conceptual accuracy well defined without any
// ordering assumptions.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dialeval/types.hpp"

namespace dialeval::align {

enum class EditKind { Match, Substitute, Delete, Insert };

inline std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::Match: return "match";
    case EditKind::Substitute: return "sub";
    case EditKind::Delete: return "del";
    case EditKind::Insert: return "ins";
  }
  return "?";
}

// One step of a word edit script. Indices are -1 on the side an
// insertion/deletion does not touch.
struct EditOp {
  EditKind kind = EditKind::Match;
  int ref_index = -1;
  int hyp_index = -1;

  bool operator==(const EditOp&) const = default;
};

// Per-slot verdict of a frame diff.
struct SlotVerdict {
  Slot slot = Slot::DepartureCity;
  EditKind kind = EditKind::Match;
  std::string ref_value;
  std::string hyp_value;

  bool operator==(const SlotVerdict&) const = default;
};

struct AlignmentResult {
  long correct = 0;
  long insertions = 0;
  long deletions = 0;
  long substitutions = 0;
  long ref_len = 0;

  std::vector<EditOp> script;        // word alignment
  std::vector<SlotVerdict> verdicts;  // frame differencing

  long errors() const { return insertions + deletions + substitutions; }
  long hyp_len() const { return correct + substitutions + insertions; }
};

inline AlignmentResult align_words(const std::vector<std::string>& ref,
                                   const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();

  // cost[i][j]: minimal edits aligning ref[0,i) to hyp[0,j); op[i][j] the
  // operation chosen to reach the cell, with the tie-break order above.
  std::vector<std::vector<int>> cost(n + 1, std::vector<int>(m + 1, 0));
  std::vector<std::vector<EditKind>> op(
      n + 1, std::vector<EditKind>(m + 1, EditKind::Match));

  for (std::size_t j = 1; j <= m; ++j) {
    cost[0][j] = static_cast<int>(j);
    op[0][j] = EditKind::Insert;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i][0] = static_cast<int>(i);
    op[i][0] = EditKind::Delete;
  }

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      int best = cost[i - 1][j - 1] + (same ? 0 : 1);
      EditKind kind = same ? EditKind::Match : EditKind::Substitute;
      if (cost[i - 1][j] + 1 < best) {
        best = cost[i - 1][j] + 1;
        kind = EditKind::Delete;
      }
      if (cost[i][j - 1] + 1 < best) {
        best = cost[i][j - 1] + 1;
        kind = EditKind::Insert;
      }
      cost[i][j] = best;
      op[i][j] = kind;
    }
  }

  AlignmentResult out;
  out.ref_len = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (op[i][j]) {
      case EditKind::Match:
        out.script.push_back({EditKind::Match, static_cast<int>(i - 1),
                              static_cast<int>(j - 1)});
        ++out.correct;
        --i;
        --j;
        break;
      case EditKind::Substitute:
        out.script.push_back({EditKind::Substitute, static_cast<int>(i - 1),
                              static_cast<int>(j - 1)});
        ++out.substitutions;
        --i;
        --j;
        break;
      case EditKind::Delete:
        out.script.push_back({EditKind::Delete, static_cast<int>(i - 1), -1});
        ++out.deletions;
        --i;
        break;
      case EditKind::Insert:
        out.script.push_back({EditKind::Insert, -1, static_cast<int>(j - 1)});
        ++out.insertions;
        --j;
        break;
    }
  }
  std::reverse(out.script.begin(), out.script.end());
  return out;
}

inline AlignmentResult diff_frames(const SemanticFrame& ref,
                                   const SemanticFrame& hyp) {
  AlignmentResult out;
  out.ref_len = static_cast<long>(ref.size());
  for (Slot s : kAllSlots) {
    const auto rv = ref.value(s);
    const auto hv = hyp.value(s);
    if (!rv && !hv) continue;
    SlotVerdict v;
    v.slot = s;
    if (rv) v.ref_value = *rv;
    if (hv) v.hyp_value = *hv;
    if (rv && hv) {
      if (*rv == *hv) {
        v.kind = EditKind::Match;
        ++out.correct;
      } else {
        v.kind = EditKind::Substitute;
        ++out.substitutions;
      }
    } else if (rv) {
      v.kind = EditKind::Delete;
      ++out.deletions;
    } else {
      v.kind = EditKind::Insert;
      ++out.insertions;
    }
    out.verdicts.push_back(std::move(v));
  }
  return out;
}

// The word-accuracy formula, 100*(N-I-D-S)/N. May be negative when
// insertions dominate. Undefined for an empty reference.
inline double accuracy(const AlignmentResult& a) {
  if (a.ref_len == 0)
    throw Error("accuracy is undefined for an empty reference");
  return 100.0 *
         static_cast<double>(a.ref_len - a.insertions - a.deletions -
                             a.substitutions) /
         static_cast<double>(a.ref_len);
}

// CORRECT iff the diff is error free, TOTAL_FAILURE iff no intended
// concept survived, PARTIAL otherwise.
inline FrameClass classify_frame(const SemanticFrame& ref,
                                 const SemanticFrame& hyp) {
  if (ref.empty())
    throw Error("classify_frame requires a non-empty reference frame");
  const AlignmentResult d = diff_frames(ref, hyp);
  if (d.errors() == 0) return FrameClass::Correct;
  if (d.correct == 0) return FrameClass::TotalFailure;
  return FrameClass::Partial;
}

// Percentage of user utterances whose frame survived the channel intact.
inline double sentence_understanding(const Corpus& corpus) {
  long users = 0, correct = 0;
  for (const auto& d : corpus.dialogues) {
    for (const auto& t : d.turns) {
      if (t.speaker != Speaker::User) continue;
      if (!t.ref_frame || !t.hyp_frame)
        throw Error("sentence_understanding: user turn " +
                    std::to_string(t.index) + " of dialogue '" + d.id +
                    "' lacks a frame");
      ++users;
      if (classify_frame(*t.ref_frame, *t.hyp_frame) == FrameClass::Correct)
        ++correct;
    }
  }
  if (users == 0)
    throw Error("sentence_understanding: corpus has no user turns");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(users);
}

}  // namespace dialeval::align
