#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/mock_server.hpp"
#include "support/mock_world.hpp"
#include "zara/backend.hpp"
#include "zara/selftrain.hpp"

using namespace zara;
using namespace zara::backend;
using namespace zara::testing;
using nlohmann::json;

TEST(Wire, RequestsRoundTrip) {
  TrainRequest train{"base", "run", {{"p1", "t1"}, {"p2", "t2"}}, json{{"lr", 0.1}}};
  const auto back = wire::parse_train_request(wire::to_json(train), "e");
  EXPECT_EQ(back.base_model, "base");
  EXPECT_EQ(back.name, "run");
  EXPECT_EQ(back.pairs, train.pairs);
  EXPECT_EQ(back.hyperparameters, train.hyperparameters);

  wire::GenerateRequest gen{"m", {"a", "b"}, {0.7, 64}};
  const auto g = wire::parse_generate_request(wire::to_json(gen), "e");
  EXPECT_EQ(g.prompts, gen.prompts);
  EXPECT_EQ(g.decoding, gen.decoding);

  const auto n = wire::parse_nli_request(wire::to_json(wire::NliRequest{"p", "h"}), "e");
  EXPECT_EQ(n.premise, "p");
  EXPECT_EQ(n.hypothesis, "h");
}

TEST(Wire, SchemaViolationsNameTheEndpoint) {
  auto expect_violation = [](auto&& call) {
    try {
      call();
      ADD_FAILURE() << "expected a schema violation";
    } catch (const BackendError& e) {
      EXPECT_EQ(e.endpoint(), "ep");
    }
  };
  expect_violation([] { wire::parse_nli_request(json{{"premise", "p"}}, "ep"); });
  expect_violation([] { wire::parse_nli_request(json{{"premise", ""}, {"hypothesis", "h"}}, "ep"); });
  expect_violation([] { wire::parse_nli_request(json::array(), "ep"); });
  expect_violation([] { wire::parse_train_request(json{{"base_model", "b"}, {"pairs", json::array()}}, "ep"); });
  expect_violation([] { wire::parse_embed_score_request(json{{"candidates", {"a"}}, {"references", json::array()}}, "ep"); });
  expect_violation([] { wire::parse_nli_response(json{{"entailment", "high"}, {"neutral", 0}, {"contradiction", 0}}, "ep"); });
  expect_violation([] { wire::parse_train_response(json{{"model_id", ""}}, "ep"); });
  expect_violation([] { wire::parse_generate_response(json{{"texts", {"a"}}}, "ep", 2); });
  expect_violation([] { wire::parse_embed_score_response(json{{"scores", {1.5}}}, "ep", 1); });
}

TEST(Wire, ResponsesRoundTrip) {
  const RawDistribution d{0.25, 0.5, 0.25};
  EXPECT_EQ(wire::parse_nli_response(wire::nli_response(d), "e"), d);
  EXPECT_EQ(wire::parse_train_response(wire::train_response("m-1"), "e"), "m-1");
  const std::vector<std::string> texts = {"x", "y"};
  EXPECT_EQ(wire::parse_generate_response(wire::generate_response(texts), "e", 2), texts);
  const std::vector<double> scores = {0.0, 1.0};
  EXPECT_EQ(wire::parse_embed_score_response(wire::embed_score_response(scores), "e", 2), scores);
}

TEST(Http, ClientsAgreeWithInProcessMocks) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  auto nli = make_http_nli_scorer(server.endpoint("nli"));
  EXPECT_EQ(nli->name(), "nli");
  const auto& inst = world.episodes[0].test[0];
  const std::string premise = *inst.gold_rationale;
  const std::string hypothesis = "a hypothesis about " + inst.id;
  EXPECT_EQ(nli->classify(premise, hypothesis), world.backends.nli[0]->classify(premise, hypothesis));

  auto trainer = make_http_trainer(server.endpoint());
  TrainRequest request{"base", "run-x", {{"p", "t"}}, json::object()};
  EXPECT_EQ(trainer->train(request), world.backends.trainer->train(request));

  auto generator = make_http_generator(server.endpoint());
  std::vector<std::string> prompts;
  for (const auto& i : world.episodes[0].test) prompts.push_back(promptgen::render_prompt(world.tmpl, i));
  EXPECT_EQ(generator->generate("mock-model:r:n=8", prompts, {}),
            world.backends.generator->generate("mock-model:r:n=8", prompts, {}));

  auto embedding = make_http_embedding_scorer(server.endpoint());
  const std::vector<std::string> a = {"the cat sat", "x"};
  const std::vector<std::string> b = {"the cat sat", "y"};
  EXPECT_EQ(embedding->similarity(a, b), world.backends.embedding->similarity(a, b));
  EXPECT_TRUE(probe_health(server.endpoint()));
}

TEST(Http, EpisodeOverHttpMatchesInProcess) {
  MockWorld world(Task::SBIC);
  MockServer server(world.backends);
  const auto pool = world.pool(0);
  selftrain::EpisodeRun run;
  run.episode = &world.episodes[0];
  run.pool = &pool;
  run.prompt_template = world.tmpl;
  run.alpha = 0.5;
  const auto local = selftrain::run_episode(run, world.episode_backends());

  std::vector<std::shared_ptr<NliScorer>> nli;
  std::vector<std::unique_ptr<MockServer>> nli_servers;
  for (std::size_t i = 0; i < world.backends.nli.size(); ++i) {
    nli_servers.push_back(std::make_unique<MockServer>(world.backends));
    nli_servers.back()->nli_index = i;
    nli.push_back(make_http_nli_scorer(nli_servers.back()->endpoint(world.backends.nli[i]->name())));
  }
  approx::Approximator approximator(nli);
  auto trainer = make_http_trainer(server.endpoint());
  auto generator = make_http_generator(server.endpoint());
  auto embedding = make_http_embedding_scorer(server.endpoint());
  const auto remote = selftrain::run_episode(run, {trainer.get(), generator.get(), &approximator, embedding.get()});
  EXPECT_EQ(selftrain::to_json(remote), selftrain::to_json(local));
}

TEST(Http, RetriesServerErrorsThenSucceeds) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  server.fail_next = 2;
  auto nli = make_http_nli_scorer(server.endpoint("nli", 2));
  EXPECT_NO_THROW(nli->classify("p", "h"));
  EXPECT_EQ(server.requests.load(), 3);
}

TEST(Http, GivesUpAfterRetriesAndNamesEndpoint) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  server.fail_next = 10;
  auto nli = make_http_nli_scorer(server.endpoint("nli", 1));
  try {
    nli->classify("p", "h");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.endpoint(), server.url());
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
  EXPECT_EQ(server.requests.load(), 2);
}

TEST(Http, ClientErrorsAreNotRetried) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  server.fail_status = 400;
  server.fail_next = 1;
  auto nli = make_http_nli_scorer(server.endpoint("nli", 3));
  EXPECT_THROW(nli->classify("p", "h"), BackendError);
  EXPECT_EQ(server.requests.load(), 1);
  // Schema violations rejected by the server surface as 4xx too.
  EXPECT_THROW(nli->classify("", "h"), BackendError);
  EXPECT_EQ(server.requests.load(), 2);
}

TEST(Http, InvalidResponseIsRejected) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  server.raw_nli_override = json{{"entailment", 0.9}, {"neutral", 0.9}};
  auto nli = make_http_nli_scorer(server.endpoint("nli", 0));
  EXPECT_THROW(nli->classify("p", "h"), BackendError);
  server.raw_nli_override = json{{"entailment", 0.9}, {"neutral", 0.9}, {"contradiction", 0.9}};
  approx::Approximator approximator({nli});
  try {
    approximator.score({"p", "h", nlimap::NliClass::Entailment, "x"});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.endpoint(), "nli");
  }
}

TEST(Http, TimeoutsAreBackendErrors) {
  MockWorld world(Task::ComVE);
  MockServer server(world.backends);
  server.delay_ms = 400;
  auto nli = make_http_nli_scorer(server.endpoint("nli", 0, std::chrono::milliseconds(100)));
  EXPECT_THROW(nli->classify("p", "h"), BackendError);
}

TEST(Http, UnreachableEndpointIsNamed) {
  const std::string locator = "http://127.0.0.1:" + std::to_string(unused_port());
  auto trainer = make_http_trainer({locator, "trainer", std::chrono::milliseconds(500), 1});
  try {
    trainer->train({"base", "n", {{"p", "t"}}, json::object()});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.endpoint(), locator);
    EXPECT_NE(std::string(e.what()).find(locator), std::string::npos);
  }
  EXPECT_FALSE(probe_health({locator, "", std::chrono::milliseconds(200), 0}));
  EXPECT_THROW(make_http_generator({"ftp://x", "", std::chrono::milliseconds(10), 0}), BackendError);
}
