#include <catch2/catch.hpp>

#include "dialeval/annotate.hpp"
#include "dialeval/trial.hpp"
#include "test_support.hpp"

using namespace dialeval;
using namespace dialeval::annotate;
using namespace testsup;

TEST_CASE("explicit confirmation of a wrong value is repair, hence AP") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D1, d1_exemplar_scenario(), d1_exemplar_script(), db);
  d = auto_annotate(std::move(d), d1_exemplar_scenario());
  // S2 confirms Trento although the user said Torino.
  REQUIRE(d.turns[2].system_act->type == ActType::ConfirmBunch);
  CHECK(d.turns[2].system_act->items[0].value == "TRENTO");
  CHECK(d.turns[2].annotations.ca_tag == CaTag::AP);
  // All nine system turns of the scripted D1 dialogue are appropriate.
  for (const auto& t : d.turns)
    if (t.speaker == Speaker::System)
      CHECK(t.annotations.ca_tag == CaTag::AP);
}

TEST_CASE("implicit embedding of a wrong value is inappropriate") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D2, d2_exemplar_scenario(), d2_exemplar_script(), db);
  d = auto_annotate(std::move(d), d2_exemplar_scenario());
  // S2 presupposes leaving from Merano; the user wanted Milano.
  REQUIRE(d.turns[2].system_act->type == ActType::AskSlot);
  CHECK(d.turns[2].annotations.ca_tag == CaTag::IA);
  // The partially failed U1 is therefore not recovered.
  CHECK(d.turns[1].annotations.frame_class == FrameClass::Partial);
  CHECK(d.turns[1].annotations.recovered == false);
  // U2 denies and corrects: a user turn correction.
  CHECK(d.turns[3].annotations.correction == Correction::Utc);
  // The later bunch confirmation and the answer are appropriate.
  CHECK(d.turns[4].annotations.ca_tag == CaTag::AP);
  CHECK(d.turns[6].annotations.ca_tag == CaTag::AP);
}

TEST_CASE("a partial turn followed by an appropriate answer is recovered") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D1, recovery_scenario(), recovery_script(), db);
  d = auto_annotate(std::move(d), recovery_scenario());
  CHECK(d.turns[1].annotations.frame_class == FrameClass::Partial);
  CHECK(d.turns[1].annotations.recovered == true);
  CHECK(d.turns[3].annotations.frame_class == FrameClass::Partial);
  CHECK(d.turns[3].annotations.recovered == true);
  // Every PARTIAL user turn gets a verdict, never absent.
  for (const auto& t : d.turns)
    if (t.annotations.frame_class == FrameClass::Partial)
      CHECK(t.annotations.recovered.has_value());
}

TEST_CASE("auto-annotation is deterministic") {
  const auto db = sim::TimetableDB::builtin();
  const auto scenario = sim::bundled_scenarios_full()[10];
  Dialogue d = sim::run_dialogue(scenario, Strategy::D2,
                                 sim::ErrorModel::defaults(db), 0.4, 31, db);
  Dialogue a = auto_annotate(d, scenario);
  Dialogue b = auto_annotate(d, scenario);
  CHECK(a == b);
}

TEST_CASE("zero-error dialogues are annotated all-AP, all-normal") {
  const auto db = sim::TimetableDB::builtin();
  for (Strategy strategy : {Strategy::D1, Strategy::D2}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto scenario = sim::bundled_scenarios_basic()[seed % 8];
      Dialogue d = sim::run_dialogue(scenario, strategy,
                                     sim::ErrorModel::off(), 1.0, seed, db);
      d = auto_annotate(std::move(d), scenario);
      for (const auto& t : d.turns) {
        if (t.speaker == Speaker::System)
          CHECK(t.annotations.ca_tag == CaTag::AP);
        else
          CHECK(t.annotations.frame_class == FrameClass::Correct);
        CHECK(t.annotations.correction == Correction::Normal);
      }
    }
  }
}

TEST_CASE("replies to repetition requests are user corrections") {
  const auto db = sim::TimetableDB::builtin();
  const auto scenario = d1_exemplar_scenario();
  std::vector<ScriptedExchange> script = {
      // The first utterance is lost entirely.
      {SemanticFrame{{Slot::DepartureCity, "TORINO"},
                     {Slot::ArrivalCity, "MILANO"}},
       SemanticFrame{}},
      // The repeat gets through.
      {SemanticFrame{{Slot::DepartureCity, "TORINO"},
                     {Slot::ArrivalCity, "MILANO"}},
       SemanticFrame{{Slot::DepartureCity, "TORINO"},
                     {Slot::ArrivalCity, "MILANO"}}},
  };
  Dialogue d = run_scripted(Strategy::D1, scenario, script, db);
  d = auto_annotate(std::move(d), scenario);
  REQUIRE(d.turns[2].system_act->type == ActType::RequestRepeat);
  CHECK(d.turns[2].annotations.correction == Correction::Stc);
  CHECK(d.turns[2].annotations.ca_tag == CaTag::AP);
  CHECK(d.turns[1].annotations.frame_class == FrameClass::TotalFailure);
  CHECK(d.turns[3].annotations.correction == Correction::Utc);
}

TEST_CASE("transaction success needs every required attribute delivered") {
  const auto db = sim::TimetableDB::builtin();
  Scenario scenario = d1_exemplar_scenario();
  scenario.required_attributes = {attr::kTimes, attr::kRestaurant};
  // The scripted dialogue asks for train type and cost but never the
  // restaurant, so the transaction fails.
  Dialogue d = run_scripted(Strategy::D1, scenario, d1_exemplar_script(), db);
  CHECK_FALSE(derive_transaction_success(d, scenario));
  // With only times required it still fails: the script ends before CLOSE.
  CHECK_FALSE(derive_transaction_success(d, d1_exemplar_scenario()));

  // A finished zero-error dialogue against the same scenario succeeds.
  Dialogue full = sim::run_dialogue(scenario, Strategy::D1,
                                    sim::ErrorModel::off(), 1.0, 5, db);
  CHECK(derive_transaction_success(full, scenario));
  // D2 cannot deliver the restaurant information.
  Dialogue d2 = sim::run_dialogue(scenario, Strategy::D2,
                                  sim::ErrorModel::off(), 1.0, 5, db);
  CHECK_FALSE(derive_transaction_success(d2, scenario));
}

TEST_CASE("an empty sidecar changes nothing") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D1, recovery_scenario(), recovery_script(), db);
  d = auto_annotate(std::move(d), recovery_scenario());
  Corpus c;
  c.dialogues.push_back(d);
  CHECK(merge_annotations(c, {}) == c);
}

TEST_CASE("a sidecar retags one field with manual provenance") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D2, d2_exemplar_scenario(), d2_exemplar_script(), db);
  d = auto_annotate(std::move(d), d2_exemplar_scenario());
  Corpus c;
  c.dialogues.push_back(d);
  REQUIRE(c.dialogues[0].turns[2].annotations.ca_tag == CaTag::IA);

  const Corpus merged = merge_annotations(
      c, {{"scripted-s02", 2, "ca_tag", "AP"}});
  const auto& turn = merged.dialogues[0].turns[2];
  CHECK(turn.annotations.ca_tag == CaTag::AP);
  CHECK(turn.annotations.source == AnnotationSource::Manual);
  REQUIRE(turn.annotations.manual_fields.size() == 1);
  CHECK(turn.annotations.manual_fields[0] == "ca_tag");
  // Only that field changed.
  Corpus expected = c;
  expected.dialogues[0].turns[2].annotations.ca_tag = CaTag::AP;
  expected.dialogues[0].turns[2].annotations.source =
      AnnotationSource::Manual;
  expected.dialogues[0].turns[2].annotations.manual_fields = {"ca_tag"};
  CHECK(merged == expected);

  // Re-annotating keeps the manual override.
  Dialogue re = auto_annotate(merged.dialogues[0], d2_exemplar_scenario());
  CHECK(re.turns[2].annotations.ca_tag == CaTag::AP);
  CHECK(re.turns[2].annotations.manual_fields ==
        std::vector<std::string>{"ca_tag"});
}

TEST_CASE("sidecar errors: dangling keys and type mismatches") {
  const auto db = sim::TimetableDB::builtin();
  Dialogue d = run_scripted(Strategy::D1, recovery_scenario(), recovery_script(), db);
  d = auto_annotate(std::move(d), recovery_scenario());
  Corpus c;
  c.dialogues.push_back(d);

  try {
    merge_annotations(c, {{"nope", 0, "ca_tag", "AP"}});
    FAIL("expected a dangling-key error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
  CHECK_THROWS_AS(
      merge_annotations(c, {{"scripted-s03", 99, "ca_tag", "AP"}}), Error);
  // ca_tag on a user turn is a type mismatch.
  CHECK_THROWS_AS(
      merge_annotations(c, {{"scripted-s03", 1, "ca_tag", "AP"}}), Error);
  CHECK_THROWS_AS(
      merge_annotations(c, {{"scripted-s03", 0, "frame_class", "CORRECT"}}),
      Error);
  CHECK_THROWS_AS(
      merge_annotations(c, {{"scripted-s03", 0, "ca_tag", "SUPER"}}), Error);
}

TEST_CASE("sidecar files round trip") {
  const std::string text =
      "{\"record\":\"annotation\",\"dialogue_id\":\"d1\",\"turn_index\":2,"
      "\"field\":\"ca_tag\",\"value\":\"AP\"}\n"
      "{\"dialogue_id\":\"d1\",\"turn_index\":3,\"field\":\"recovered\","
      "\"value\":true}\n";
  auto entries = sidecar_from_string(text);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].field == "ca_tag");
  CHECK(entries[1].value == "true");
  CHECK_THROWS_AS(sidecar_from_string("{\"field\":\"ca_tag\"}\n"), ParseError);
}
