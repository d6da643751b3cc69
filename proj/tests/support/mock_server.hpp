#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "zara/backend.hpp"
#include "zara/error.hpp"

namespace zara::testing {

/// Serves a BackendSet over the wire protocol on 127.0.0.1, the way the
/// model-serving sidecar does. Failure knobs let tests exercise the client's
/// retry and timeout handling.
class MockServer {
 public:
  explicit MockServer(backend::BackendSet backends) : backends_(std::move(backends)) {
    using nlohmann::json;
    auto guarded = [this](auto handler) {
      return [this, handler](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
        if (fail_next > 0) {
          --fail_next;
          res.status = fail_status;
          res.set_content("injected", "text/plain");
          return;
        }
        try {
          const json body = json::parse(req.body);
          res.set_content(handler(body).dump(), "application/json");
        } catch (const BackendError& e) {
          res.status = 400;
          res.set_content(e.what(), "text/plain");
        } catch (const std::exception& e) {
          res.status = 500;
          res.set_content(e.what(), "text/plain");
        }
      };
    };
    server_.Post(std::string(backend::wire::kNliPath), guarded([this](const json& body) {
                   const auto r = backend::wire::parse_nli_request(body, "server");
                   const auto& nli = backends_.nli.at(nli_index.load());
                   return raw_nli_override ? *raw_nli_override
                                           : backend::wire::nli_response(nli->classify(r.premise, r.hypothesis));
                 }));
    server_.Post(std::string(backend::wire::kTrainPath), guarded([this](const json& body) {
                   return backend::wire::train_response(
                       backends_.trainer->train(backend::wire::parse_train_request(body, "server")));
                 }));
    server_.Post(std::string(backend::wire::kGeneratePath), guarded([this](const json& body) {
                   const auto r = backend::wire::parse_generate_request(body, "server");
                   const auto texts = backends_.generator->generate(r.model_id, r.prompts, r.decoding);
                   return backend::wire::generate_response(texts);
                 }));
    server_.Post(std::string(backend::wire::kEmbedScorePath), guarded([this](const json& body) {
                   const auto r = backend::wire::parse_embed_score_request(body, "server");
                   const auto scores = backends_.embedding->similarity(r.candidates, r.references);
                   return backend::wire::embed_score_response(scores);
                 }));
    server_.Get(std::string(backend::wire::kHealthPath),
                [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  backend::Endpoint endpoint(std::string name = "", int retries = 2,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) const {
    return {url(), std::move(name), timeout, retries};
  }

  std::atomic<int> requests{0};
  std::atomic<int> fail_next{0};
  std::atomic<int> fail_status{503};
  std::atomic<int> delay_ms{0};
  std::atomic<std::size_t> nli_index{0};
  std::optional<nlohmann::json> raw_nli_override;

 private:
  backend::BackendSet backends_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// A loopback port with nothing listening on it.
inline int unused_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  return port;
}

}  // namespace zara::testing
