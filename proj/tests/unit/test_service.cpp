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

#include <filesystem>

#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"
#include "vaxtract/annotation.hpp"
#include "vaxtract/cli.hpp"
#include "vaxtract/error.hpp"
#include "vaxtract/mock_server.hpp"
#include "vaxtract/rule_extractor.hpp"
#include "vaxtract/service.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
using testing::DataPath;
using testing::ShippedLexicon;

BatchEngine RulesEngine() {
  return [](const std::vector<TriageNote>& notes) {
    std::vector<ExtractionResult> out;
    for (const auto& n : notes) out.push_back(ExtractWithRules(n, ShippedLexicon()));
    return out;
  };
}

class Api : public ::testing::Test {
 protected:
  void Start(ServiceOptions extra = {}) {
    extra.lexicon = &ShippedLexicon();
    extra.store = &store_;
    service_ = std::make_unique<Service>(std::move(extra));
    const int port = service_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port);
    client_->set_read_timeout(10, 0);
  }
  void TearDown() override {
    if (service_) service_->stop();
  }

  httplib::Result Post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }
  static void ExpectJsonError(const httplib::Result& res, int status, const std::string& code) {
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, status);
    const json body = json::parse(res->body, nullptr, false);
    ASSERT_TRUE(body.is_object()) << res->body;
    EXPECT_EQ(body.value("code", ""), code) << res->body;
    EXPECT_TRUE(body.contains("message"));
  }

  AnnotationStore store_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(Api, Health) {
  Start();
  const auto res = client_->Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");
}

TEST_F(Api, ExtractWithRules) {
  Start();
  const auto res = Post("/api/extract", {{"age_years", 0}, {"age_months", 4},
                                          {"text", "vomit post rota-virus vaccine"}, {"engine", "rules"}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const json body = json::parse(res->body);
  EXPECT_EQ(body["label"]["variant"], "Named");
  EXPECT_EQ(body["label"]["canonical_id"], "Rotavirus");
  EXPECT_EQ(body["engine"], "rules");

  // Rules is the default without an endpoint.
  const auto plain = Post("/api/extract", {{"age_years", 13}, {"age_months", 2},
                                            {"text", "Allergic reaction post immms."}});
  ASSERT_EQ(plain->status, 200);
  EXPECT_EQ(json::parse(plain->body)["label"]["variant"], "Unspecified");
}

TEST_F(Api, ExtractErrors) {
  Start();
  ExpectJsonError(client_->Post("/api/extract", "not json", "application/json"), 400, "invalid_argument");
  ExpectJsonError(Post("/api/extract", {{"age_years", 1}, {"text", "x"}}), 400, "invalid_argument");
  ExpectJsonError(Post("/api/extract", {{"age_years", 1}, {"age_months", 14}, {"text", "x"}}), 400,
                  "age_out_of_range");
  ExpectJsonError(Post("/api/extract", {{"age_years", 1}, {"age_months", 1}, {"text", "x"}, {"engine", "llm"}}),
                  400, "engine_unavailable");
  ExpectJsonError(Post("/api/extract", {{"age_years", 1}, {"age_months", 1}, {"text", "x"}, {"engine", "gpt"}}),
                  400, "invalid_argument");
  ExpectJsonError(client_->Get("/api/nope"), 404, "not_found");
}

TEST_F(Api, ExtractWithTheModel) {
  MockFixtures f;
  f.fallback = MockStep{200, R"({"Vaccination": "flu vax"})"};
  MockChatServer mock(std::move(f));
  mock.start();
  ServiceOptions o;
  o.endpoint = ModelEndpoint{};
  o.endpoint->base_url = mock.base_url();
  o.endpoint->model_name = "mock";
  Start(o);
  const auto res = Post("/api/extract", {{"age_years", 3}, {"age_months", 1}, {"text", "sob on b/g of flu vax"}});
  ASSERT_EQ(res->status, 200) << res->body;
  const json body = json::parse(res->body);
  EXPECT_EQ(body["engine"], "llm");
  EXPECT_EQ(body["label"]["canonical_id"], "Influenza");
  EXPECT_EQ(body["label"]["surface"], "flu vax");
  mock.stop();

  const auto down = Post("/api/extract", {{"age_years", 3}, {"age_months", 1}, {"text", "x"}});
  ASSERT_TRUE(down);
  EXPECT_EQ(down->status, 502);
  EXPECT_TRUE(json::parse(down->body).contains("code"));
}

TEST_F(Api, LexiconLabelsAreCanonicalIdsPlusNoAndUnspecified) {
  Start();
  const auto res = client_->Get("/api/lexicon");
  ASSERT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  std::vector<std::string> want = {"No", "Unspecified"};
  for (const auto& e : ShippedLexicon().entries()) want.push_back(e.canonical_id);
  EXPECT_EQ(body["labels"].get<std::vector<std::string>>(), want);
  EXPECT_EQ(body["version"], ShippedLexicon().version());
}

TEST_F(Api, EmptyQueueAndUnknownRecord) {
  Start();
  const auto next = client_->Get("/api/annotations/next?reviewer=alice");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->status, 204);
  ExpectJsonError(client_->Get("/api/annotations/next"), 400, "invalid_argument");
  ExpectJsonError(Post("/api/annotations/unknown/decision", {{"reviewer", "alice"}, {"action", "accept"}}), 404,
                  "unknown_record");
  ExpectJsonError(client_->Get("/api/export"), 409, "nothing_to_export");
}

TEST_F(Api, ReviewFlow) {
  store_.prelabel(LoadNotesFile(DataPath("fixtures/published_examples.jsonl")), RulesEngine());
  Start();

  auto next = client_->Get("/api/annotations/next?reviewer=alice");
  ASSERT_EQ(next->status, 200);
  json card = json::parse(next->body);
  EXPECT_EQ(card["note"]["id"], "ex-1");
  EXPECT_EQ(card["proposed"]["label"]["canonical_id"], "6 weeks");
  ExpectJsonError(Post("/api/annotations/ex-1/decision", {{"reviewer", "bob"}, {"action", "accept"}}), 409,
                  "lease_violation");
  auto done = Post("/api/annotations/ex-1/decision", {{"reviewer", "alice"}, {"action", "accept"}});
  ASSERT_EQ(done->status, 200) << done->body;
  EXPECT_EQ(json::parse(done->body)["status"], "accepted");
  // Resubmitting is harmless.
  EXPECT_EQ(Post("/api/annotations/ex-1/decision", {{"reviewer", "alice"}, {"action", "accept"}})->status, 200);

  next = client_->Get("/api/annotations/next?reviewer=alice");
  card = json::parse(next->body);
  EXPECT_EQ(card["note"]["id"], "ex-2");
  ExpectJsonError(
      Post("/api/annotations/ex-2/decision", {{"reviewer", "alice"}, {"action", "correct"}, {"label", "Smallpox"}}),
      400, "unknown_label");
  ExpectJsonError(
      Post("/api/annotations/ex-2/decision", {{"reviewer", "alice"}, {"action", "correct"}, {"label", "Unspecified"}}),
      400, "identical_correction");
  ExpectJsonError(Post("/api/annotations/ex-2/decision", {{"reviewer", "alice"}, {"action", "approve"}}), 400,
                  "invalid_argument");
  done = Post("/api/annotations/ex-2/decision",
              {{"reviewer", "alice"}, {"action", "correct"}, {"label", "Influenza"}});
  ASSERT_EQ(done->status, 200) << done->body;
  EXPECT_EQ(json::parse(done->body)["final"]["canonical_id"], "Influenza");

  const json stats = json::parse(client_->Get("/api/annotations/stats")->body);
  EXPECT_EQ(stats["accepted"], 1);
  EXPECT_EQ(stats["corrected"], 1);
  EXPECT_EQ(stats["pending"], 3);
  EXPECT_TRUE(stats["agreement"].is_null());
  ExpectJsonError(client_->Get("/api/annotations/stats?a=alice&b=bob"), 409, "no_dual_reviews");

  const auto exported = client_->Get("/api/export");
  ASSERT_EQ(exported->status, 200);
  EXPECT_EQ(exported->body, store_.export_dataset(ShippedLexicon()).jsonl);
  const auto manifest = client_->Get("/api/export?manifest=1");
  EXPECT_EQ(json::parse(manifest->body)["examples"], 2);

  // Every mutation made over the API is in the log.
  std::size_t decisions = 0;
  for (const auto& e : store_.events()) decisions += e.action == "accept" || e.action == "correct" ? 1 : 0;
  EXPECT_EQ(decisions, 2u);
}

TEST_F(Api, BearerToken) {
  ServiceOptions o;
  o.api_token = "s3cret";
  Start(o);
  ExpectJsonError(client_->Get("/api/lexicon"), 401, "unauthorized");
  EXPECT_EQ(client_->Get("/healthz")->status, 200);
  client_->set_bearer_token_auth("wrong");
  ExpectJsonError(client_->Get("/api/lexicon"), 401, "unauthorized");
  client_->set_bearer_token_auth("s3cret");
  EXPECT_EQ(client_->Get("/api/lexicon")->status, 200);
}

TEST_F(Api, ServesUiAssets) {
  testing::TempDir ui;
  testing::WriteFile(ui.file("index.html"), "<html>review</html>");
  ServiceOptions o;
  o.ui_assets = ui.path().string();
  Start(o);
  const auto res = client_->Get("/index.html");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>review</html>");
}

TEST_F(Api, MatchesTheCliOnTheSameNotes) {
  Start();
  testing::TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(RunCli({"vaxtract", "extract", "--engine", "rules", "--in", DataPath("corpus/synthetic60.jsonl"), "--out",
                    dir.file("pred.jsonl")},
                   out, err),
            kExitOk)
      << err.str();
  const Dataset notes = LoadNotesFile(DataPath("corpus/synthetic60.jsonl"));
  std::istringstream lines(testing::ReadFile(dir.file("pred.jsonl")));
  std::string line;
  for (const auto& note : notes.notes) {
    ASSERT_TRUE(std::getline(lines, line));
    const auto res = Post("/api/extract", {{"id", note.id},
                                            {"age_years", note.age_years},
                                            {"age_months", note.age_months},
                                            {"text", note.text},
                                            {"engine", "rules"}});
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).get<ExtractionResult>(), json::parse(line).get<ExtractionResult>())
        << note.id;
  }
}

TEST(ServiceSetup, Errors) {
  EXPECT_THROW(Service(ServiceOptions{}), Error);
  AnnotationStore store;
  ServiceOptions o;
  o.lexicon = &ShippedLexicon();
  o.store = &store;
  Service second(o);
  try {
    second.bind("256.0.0.1", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  EXPECT_EQ(HttpStatusFor(ErrorCode::kUnknownRecord), 404);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kTimeout), 504);
}

}  // namespace
}  // namespace vaxtract
