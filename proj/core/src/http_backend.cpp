#include <httplib.h>

#include "zara/backend.hpp"
#include "zara/error.hpp"

namespace zara::backend {

namespace {

using nlohmann::json;

struct Locator {
  std::string scheme_host_port;
  std::string path_prefix;
};

Locator parse_locator(const Endpoint& endpoint) {
  const std::string& loc = endpoint.locator;
  const auto scheme_end = loc.find("://");
  if (scheme_end == std::string::npos || loc.substr(0, scheme_end) != "http") {
    throw BackendError(loc, "unsupported endpoint locator (expected http://host:port[/prefix])");
  }
  const auto path_begin = loc.find('/', scheme_end + 3);
  Locator out;
  out.scheme_host_port = loc.substr(0, path_begin);
  if (path_begin != std::string::npos) {
    out.path_prefix = loc.substr(path_begin);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

class HttpChannel {
 public:
  explicit HttpChannel(Endpoint endpoint)
      : endpoint_(std::move(endpoint)), locator_(parse_locator(endpoint_)) {}

  const Endpoint& endpoint() const { return endpoint_; }

  json post(std::string_view route, const json& body) const {
    const std::string path = locator_.path_prefix + std::string(route);
    const std::string payload = body.dump();
    std::string last_error;
    const int attempts = std::max(0, endpoint_.retries) + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      // A fresh client per call keeps concurrent callers independent.
      httplib::Client client(locator_.scheme_host_port);
      const auto timeout = endpoint_.timeout;
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      auto result = client.Post(path, payload, "application/json");
      if (!result) {
        last_error = "unreachable at " + endpoint_.locator + path + " (" +
                     httplib::to_string(result.error()) + ")";
        continue;
      }
      if (result->status >= 500) {
        last_error = "HTTP " + std::to_string(result->status) + " from " + path + ": " + result->body;
        continue;
      }
      if (result->status != 200) {
        throw BackendError(endpoint_.locator, "HTTP " + std::to_string(result->status) + " from " +
                                                  path + ": " + result->body);
      }
      try {
        return json::parse(result->body);
      } catch (const json::parse_error& e) {
        throw BackendError(endpoint_.locator, std::string("invalid JSON response: ") + e.what());
      }
    }
    throw BackendError(endpoint_.locator,
                       last_error + " after " + std::to_string(attempts) + " attempt(s)");
  }

  bool health() const {
    httplib::Client client(locator_.scheme_host_port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout));
    auto result = client.Get(locator_.path_prefix + std::string(wire::kHealthPath));
    return result && result->status == 200;
  }

 private:
  Endpoint endpoint_;
  Locator locator_;
};

class HttpNliScorer final : public NliScorer {
 public:
  explicit HttpNliScorer(const Endpoint& endpoint)
      : channel_(endpoint), name_(endpoint.name.empty() ? endpoint.locator : endpoint.name) {}
  const std::string& name() const override { return name_; }
  RawDistribution classify(std::string_view premise, std::string_view hypothesis) override {
    const json response = channel_.post(
        wire::kNliPath, wire::to_json(wire::NliRequest{std::string(premise), std::string(hypothesis)}));
    return wire::parse_nli_response(response, channel_.endpoint().locator);
  }

 private:
  HttpChannel channel_;
  std::string name_;
};

class HttpTrainer final : public Trainer {
 public:
  explicit HttpTrainer(const Endpoint& endpoint)
      : channel_(endpoint), name_(endpoint.name.empty() ? endpoint.locator : endpoint.name) {}
  const std::string& name() const override { return name_; }
  std::string train(const TrainRequest& request) override {
    return wire::parse_train_response(channel_.post(wire::kTrainPath, wire::to_json(request)),
                                      channel_.endpoint().locator);
  }

 private:
  HttpChannel channel_;
  std::string name_;
};

class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(const Endpoint& endpoint)
      : channel_(endpoint), name_(endpoint.name.empty() ? endpoint.locator : endpoint.name) {}
  const std::string& name() const override { return name_; }
  std::vector<std::string> generate(const std::string& model_id, std::span<const std::string> prompts,
                                    const Decoding& decoding) override {
    wire::GenerateRequest request{model_id, {prompts.begin(), prompts.end()}, decoding};
    return wire::parse_generate_response(channel_.post(wire::kGeneratePath, wire::to_json(request)),
                                         channel_.endpoint().locator, prompts.size());
  }

 private:
  HttpChannel channel_;
  std::string name_;
};

class HttpEmbeddingScorer final : public EmbeddingScorer {
 public:
  explicit HttpEmbeddingScorer(const Endpoint& endpoint)
      : channel_(endpoint), name_(endpoint.name.empty() ? endpoint.locator : endpoint.name) {}
  const std::string& name() const override { return name_; }
  std::vector<double> similarity(std::span<const std::string> candidates,
                                 std::span<const std::string> references) override {
    wire::EmbedScoreRequest request{{candidates.begin(), candidates.end()},
                                    {references.begin(), references.end()}};
    return wire::parse_embed_score_response(
        channel_.post(wire::kEmbedScorePath, wire::to_json(request)), channel_.endpoint().locator,
        candidates.size());
  }

 private:
  HttpChannel channel_;
  std::string name_;
};

}  // namespace

std::shared_ptr<NliScorer> make_http_nli_scorer(const Endpoint& endpoint) {
  return std::make_shared<HttpNliScorer>(endpoint);
}
std::shared_ptr<Trainer> make_http_trainer(const Endpoint& endpoint) {
  return std::make_shared<HttpTrainer>(endpoint);
}
std::shared_ptr<Generator> make_http_generator(const Endpoint& endpoint) {
  return std::make_shared<HttpGenerator>(endpoint);
}
std::shared_ptr<EmbeddingScorer> make_http_embedding_scorer(const Endpoint& endpoint) {
  return std::make_shared<HttpEmbeddingScorer>(endpoint);
}

bool probe_health(const Endpoint& endpoint) {
  try {
    return HttpChannel(endpoint).health();
  } catch (const Error&) {
    return false;
  }
}

}  // namespace zara::backend
