// Copyright 2026 The Vaxtract Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "test_support.hpp"
#include "vaxtract/corpus.hpp"
#include "vaxtract/error.hpp"
#include "vaxtract/llm_extractor.hpp"
#include "vaxtract/mock_server.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
using testing::DataPath;
using testing::ShippedLexicon;

constexpr const char* kPromptSha256 = "926c650a46f09b3b3c193f941e9cfc32ccd794ee8e5a6c82463d81d3058cb5a4";

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

std::string Chat(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

TriageNote Note(const std::string& id, const std::string& text) { return TriageNote{id, 3, 1, text, std::nullopt}; }

// A port nothing listens on.
int ClosedPort() {
  MockChatServer probe(MockFixtures{});
  const int port = probe.start();
  probe.stop();
  return port;
}

TEST(Prompt, PinnedToTheVersionedResource) {
  const std::string& prompt = ExtractionPrompt();
  EXPECT_EQ(Sha256Hex(prompt), kPromptSha256);
  std::string file = testing::ReadFile(DataPath("prompts/vaccine_extraction_v1.txt"));
  ASSERT_FALSE(file.empty());
  ASSERT_EQ(file.back(), '\n');
  file.pop_back();
  EXPECT_EQ(prompt, file);
  EXPECT_EQ(prompt.substr(0, prompt.find('\n')),
            "You are an expert medical analyst reviewing emergency department triage notes.");
  EXPECT_EQ(ExtractionPromptVersion(), "v1");
}

TEST(Prompt, BuildPromptCarriesTheAgePrefixedNote) {
  const PromptBundle b = BuildPrompt(TriageNote{"n", 0, 4, "vomit post rota-virus vaccine", std::nullopt});
  EXPECT_EQ(b.system_text, ExtractionPrompt());
  EXPECT_EQ(b.user_text, "Age: 0Y 4M. vomit post rota-virus vaccine");
  EXPECT_EQ(b.decoding.temperature, 0.0);

  const json body = json::parse(ChatRequestBody(b));
  EXPECT_EQ(body["model"], "llama-3.2-3b-instruct");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], ExtractionPrompt());
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], b.user_text);
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 64);
}

TEST(ParseResponse, CascadeStages) {
  // whole body
  EXPECT_EQ(ParseResponse(R"({"Vaccination": "Influenza"})"), "Influenza");
  EXPECT_EQ(ParseResponse(R"(  {"vaccination":"No"}  )"), "No");
  EXPECT_EQ(ParseResponse(R"({"VACCINATION": "Unspecified", "other": 1})"), "Unspecified");
  // nested one level
  EXPECT_EQ(ParseResponse(R"({"result": {"Vaccination": "MMR"}})"), "MMR");
  // code fence
  EXPECT_EQ(ParseResponse("```json\n{\"Vaccination\": \"Rotavirus\"}\n```"), "Rotavirus");
  EXPECT_EQ(ParseResponse("```\n{\"Vaccination\": \"Rotavirus\"}\n```\n"), "Rotavirus");
  // embedded object
  EXPECT_EQ(ParseResponse("Sure! Here you go: {\"Vaccination\": \"HPV\"} Hope that helps."), "HPV");
  EXPECT_EQ(ParseResponse("{not json} then {\"Vaccination\": \"DTP\"}"), "DTP");
  EXPECT_EQ(ParseResponse("{\"notes\": \"brace } inside\", \"Vaccination\": \"Varicella\"}"), "Varicella");
}

TEST(ParseResponse, Failures) {
  for (const std::string raw : {"", "Influenza", "Vaccination: Influenza", "{\"Vaccine\": \"Influenza\"}", "{\"Vaccination\": 3}",
                                "{\"Vaccination\": \"Influenza\""}) {
    try {
      ParseResponse(raw);
      ADD_FAILURE() << "parsed: " << raw;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParseFailure);
      ASSERT_TRUE(e.raw);
      EXPECT_EQ(*e.raw, raw);
    }
  }
}

TEST(NormalizeResponse, MapsAnswersOntoLabels) {
  const Lexicon& lex = ShippedLexicon();
  EXPECT_EQ(NormalizeResponse("No", lex).label, VaccineLabel::No());
  EXPECT_EQ(NormalizeResponse("no.", lex).label, VaccineLabel::No());
  EXPECT_EQ(NormalizeResponse(" UNSPECIFIED ", lex).label, VaccineLabel::Unspecified());
  EXPECT_TRUE(NormalizeResponse("flu vaccine", lex).label.same_identity(VaccineLabel::Named("Influenza")));
  EXPECT_EQ(NormalizeResponse("flu vaccine", lex).label.surface(), "flu vaccine");
  EXPECT_TRUE(NormalizeResponse("Hepatitis B.", lex).label.same_identity(VaccineLabel::Named("HepatitisB")));

  const ExtractionResult unknown = NormalizeResponse("Yellow Fever", lex);
  EXPECT_TRUE(unknown.unknown_surface);
  EXPECT_EQ(unknown.label.canonical_id(), "yellowfever");
  EXPECT_EQ(unknown.label.surface(), "Yellow Fever");

  EXPECT_EQ(CodeOf([&] { NormalizeResponse("  ", lex); }), ErrorCode::kInvalidArgument);
}

TEST(NormalizeResponse, ExactMatchComparesTheRawAnswer) {
  const Lexicon& lex = ShippedLexicon();
  EXPECT_EQ(NormalizeResponse("Influenza", lex, "Influenza").exact_match, true);
  EXPECT_EQ(NormalizeResponse(" Influenza ", lex, "Influenza").exact_match, true);
  EXPECT_EQ(NormalizeResponse("influenza", lex, "Influenza").exact_match, false);
  EXPECT_EQ(NormalizeResponse("No.", lex, "No").exact_match, false);
  EXPECT_EQ(NormalizeResponse("flu vax", lex, "Influenza").exact_match, false);
  EXPECT_FALSE(NormalizeResponse("flu vax", lex).exact_match);
  EXPECT_EQ(NormalizeResponse("flu vax", lex).exact_match_surface, "flu vax");
}

TEST(ExtractBatch, PreservesInputOrderUnderRandomDelays) {
  std::vector<TriageNote> notes;
  for (int i = 0; i < 40; ++i) notes.push_back(Note("n" + std::to_string(i), "note " + std::to_string(i)));
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  const ModelCaller caller = [&](const PromptBundle& b) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::mt19937 rng(std::hash<std::string>{}(b.user_text));
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 15));
    --in_flight;
    const std::string n = b.user_text.substr(b.user_text.rfind(' ') + 1);
    return std::stoi(n) % 2 == 0 ? R"({"Vaccination": "Influenza"})" : R"({"Vaccination": "No"})";
  };
  const auto results = ExtractBatch(notes, caller, ShippedLexicon(), 4);
  ASSERT_EQ(results.size(), notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    EXPECT_EQ(results[i].note_id, notes[i].id);
    EXPECT_EQ(results[i].engine, Engine::kLlm);
    EXPECT_EQ(results[i].label.is_named(), i % 2 == 0);
  }
  EXPECT_LE(peak.load(), 4);
  EXPECT_GE(peak.load(), 2);
}

TEST(ExtractBatch, FailuresNeverAbortTheBatch) {
  const std::vector<TriageNote> notes = {Note("ok", "a"), Note("garbled", "b"), Note("down", "c")};
  const ModelCaller caller = [](const PromptBundle& b) -> std::string {
    if (b.user_text.back() == 'a') return R"({"Vaccination": "MMR"})";
    if (b.user_text.back() == 'b') return "I cannot answer that.";
    throw Error(ErrorCode::kTransport, "connection refused");
  };
  const auto results = ExtractBatch(notes, caller, ShippedLexicon(), 2);
  EXPECT_TRUE(results[0].label.same_identity(VaccineLabel::Named("MMR")));
  EXPECT_FALSE(results[0].parse_failed);
  EXPECT_EQ(results[1].label, VaccineLabel::No());
  EXPECT_TRUE(results[1].parse_failed);
  EXPECT_EQ(results[1].raw_response, "I cannot answer that.");
  EXPECT_EQ(results[2].label, VaccineLabel::No());
  ASSERT_TRUE(results[2].error);
  EXPECT_NE(results[2].error->find("connection refused"), std::string::npos);
}

TEST(ExtractBatch, EmptyInput) {
  EXPECT_TRUE(ExtractBatch({}, [](const PromptBundle&) { return std::string(); }, ShippedLexicon(), 4).empty());
}

class MockEndpoint : public ::testing::Test {
 protected:
  ModelEndpoint EndpointFor(const MockChatServer& server) {
    ModelEndpoint ep;
    ep.base_url = server.base_url();
    ep.model_name = "mock";
    ep.timeout = std::chrono::milliseconds(2000);
    return ep;
  }
  PromptBundle Bundle(const std::string& text) { return BuildPrompt(Note("x", text)); }
};

TEST_F(MockEndpoint, ReturnsTheAssistantContent) {
  MockFixtures f;
  f.fallback = MockStep{200, R"({"Vaccination": "Influenza"})"};
  MockChatServer server(std::move(f));
  server.start();
  EXPECT_EQ(CallModel(EndpointFor(server), Bundle("flu vax")), R"({"Vaccination": "Influenza"})");
  ASSERT_EQ(server.requests().size(), 1u);
  const json sent = json::parse(server.requests()[0]);
  EXPECT_EQ(sent["model"], "mock");
  EXPECT_EQ(sent["messages"][1]["content"], "Age: 3Y 1M. flu vax");
}

TEST_F(MockEndpoint, RetriesA5xxOnce) {
  MockFixtures f;
  const std::string user = UserText(Note("x", "flaky"));
  f.scripts[user] = {MockStep{500, ""}, MockStep{200, R"({"Vaccination": "No"})"}};
  MockChatServer server(std::move(f));
  server.start();
  EXPECT_EQ(CallModel(EndpointFor(server), Bundle("flaky")), R"({"Vaccination": "No"})");
  EXPECT_EQ(server.requests().size(), 2u);
}

TEST_F(MockEndpoint, FiveHundredTwiceExhaustsTheBudget) {
  MockFixtures f;
  f.fallback = MockStep{500, ""};
  MockChatServer server(std::move(f));
  server.start();
  try {
    CallModel(EndpointFor(server), Bundle("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRetryExhausted);
    EXPECT_EQ(e.http_status, 500);
  }
  EXPECT_EQ(server.requests().size(), 2u);
}

TEST_F(MockEndpoint, ClientErrorsAreNotRetried) {
  MockFixtures f;
  f.fallback = MockStep{400, ""};
  MockChatServer server(std::move(f));
  server.start();
  EXPECT_EQ(CodeOf([&] { CallModel(EndpointFor(server), Bundle("x")); }), ErrorCode::kHttpStatus);
  EXPECT_EQ(server.requests().size(), 1u);
}

TEST_F(MockEndpoint, NonChatBodyIsATransportError) {
  MockFixtures f;
  f.fallback = MockStep{200, "", std::string("{\"unexpected\": true}")};
  MockChatServer server(std::move(f));
  server.start();
  EXPECT_EQ(CodeOf([&] { CallModel(EndpointFor(server), Bundle("x")); }), ErrorCode::kTransport);
}

TEST_F(MockEndpoint, SlowServerTimesOut) {
  MockFixtures f;
  f.fallback = MockStep{200, R"({"Vaccination": "No"})", std::nullopt, 800};
  MockChatServer server(std::move(f));
  server.start();
  ModelEndpoint ep = EndpointFor(server);
  ep.timeout = std::chrono::milliseconds(200);
  ep.retry_budget = 0;
  EXPECT_EQ(CodeOf([&] { CallModel(ep, Bundle("x")); }), ErrorCode::kTimeout);
}

TEST_F(MockEndpoint, UnreachableHost) {
  ModelEndpoint ep;
  ep.base_url = "http://127.0.0.1:" + std::to_string(ClosedPort());
  ep.timeout = std::chrono::milliseconds(500);
  const auto started = std::chrono::steady_clock::now();
  EXPECT_EQ(CodeOf([&] { CallModel(ep, Bundle("x")); }), ErrorCode::kTransport);
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::seconds(3));
}

TEST_F(MockEndpoint, BearerTokenIsSent) {
  MockFixtures f;
  f.fallback = MockStep{200, R"({"Vaccination": "No"})"};
  MockChatServer server(std::move(f));
  server.start();
  ModelEndpoint ep = EndpointFor(server);
  ep.auth_token = "secret";
  EXPECT_NO_THROW(CallModel(ep, Bundle("x")));
}

TEST(ModelEndpointConfig, Validation) {
  ModelEndpoint ep;
  EXPECT_EQ(CodeOf([&] { ep.validate(); }), ErrorCode::kConfig);
  ep.base_url = "ftp://example";
  EXPECT_EQ(CodeOf([&] { ep.validate(); }), ErrorCode::kConfig);
  ep.base_url = "http://localhost:8000/prefix";
  EXPECT_NO_THROW(ep.validate());
  ep.max_parallel_requests = 0;
  EXPECT_EQ(CodeOf([&] { ep.validate(); }), ErrorCode::kConfig);
}

TEST(Fixtures, TwentyNoteScriptedRun) {
  const Dataset notes = LoadNotesFile(DataPath("fixtures/llm20_notes.jsonl"), &ShippedLexicon());
  MockChatServer server(LoadMockFixturesFile(notes, DataPath("fixtures/llm20_responses.json")));
  server.start();
  ModelEndpoint ep;
  ep.base_url = server.base_url();
  ep.model_name = "mock";
  const auto results = ExtractBatch(notes.notes, ep, ShippedLexicon());
  ASSERT_EQ(results.size(), 20u);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i].note_id, notes.notes[i].id);
    EXPECT_FALSE(results[i].error) << *results[i].error;
    if (results[i].parse_failed) {
      ++failed;
      EXPECT_EQ(results[i].label, VaccineLabel::No());
    } else {
      EXPECT_TRUE(ShippedLexicon().equivalent(results[i].label, *notes.notes[i].gold)) << notes.notes[i].id;
    }
  }
  EXPECT_EQ(failed, 1u);
}

TEST(Fixtures, UnknownIdInResponsesIsRejected) {
  const Dataset notes = LoadNotesFile(DataPath("fixtures/published_examples.jsonl"));
  std::istringstream in(R"({"responses": {"nope": "{\"Vaccination\": \"No\"}"}})");
  EXPECT_EQ(CodeOf([&] { LoadMockFixtures(notes, in); }), ErrorCode::kIdMismatch);
}

}  // namespace
}  // namespace vaxtract
