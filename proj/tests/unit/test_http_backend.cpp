#include "nlt/http_backend.hpp"

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

namespace {

using nlt::ProviderErrorKind;

// Loopback chat-completions stub. Each test points it at a handler; the
// fixture owns the listener thread and picks a free port.
class StubServer {
 public:
  StubServer() {
    server_.Post("/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::function<void(const httplib::Request&, httplib::Response&)> on_request;
  std::atomic<int> hits{0};

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++hits;
    if (on_request) on_request(req, res);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

void reply_json(httplib::Response& res, const nlohmann::json& doc, int status = 200) {
  res.status = status;
  res.set_content(doc.dump(), "application/json");
}

nlt::ProviderRequest sample_request(bool structured) {
  nlt::ProviderRequest req;
  req.model_id = "test-model";
  req.system_text = "system text";
  req.user_text = "user text";
  if (structured)
    req.function_defs = std::vector<nlt::FunctionDef>{
        {"check_order_status", "order state"}, {"check_store_hours", "opening times"}};
  return req;
}

nlohmann::json ok_chat_body() {
  nlohmann::json message = {{"role", "assistant"}, {"content", "Assessment finished.\n"}};
  nlohmann::json doc;
  doc["choices"] = nlohmann::json::array({nlohmann::json{{"message", message}}});
  doc["usage"] = {{"prompt_tokens", 563}, {"completion_tokens", 342}, {"total_tokens", 905}};
  return doc;
}

}  // namespace

TEST_CASE("request body carries model, both messages, and empty-object parameters") {
  nlt::HttpBackend backend({.base_url = "http://127.0.0.1:1"});
  auto body = nlohmann::json::parse(backend.render_request_body(sample_request(true)));

  CHECK(body["model"] == "test-model");
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][0]["content"] == "system text");
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == "user text");

  REQUIRE(body["tools"].size() == 2);
  const auto& tool = body["tools"][0];
  CHECK(tool["type"] == "function");
  CHECK(tool["function"]["name"] == "check_order_status");
  CHECK(tool["function"]["description"] == "order state");
  // Parameterless by contract: an empty object schema, not null/absent.
  CHECK(tool["function"]["parameters"].is_object());
  CHECK(tool["function"]["parameters"].empty());

  // Provider-default sampling: no temperature/top_p/seed keys.
  CHECK(!body.contains("temperature"));
  CHECK(!body.contains("top_p"));
  CHECK(!body.contains("seed"));

  auto selector_body = nlohmann::json::parse(backend.render_request_body(sample_request(false)));
  CHECK(!selector_body.contains("tools"));
}

TEST_CASE("a clean response yields content, tool calls, and full usage") {
  StubServer server;
  server.on_request = [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    CHECK(body["model"] == "test-model");
    auto doc = ok_chat_body();
    doc["choices"][0]["message"]["tool_calls"] = nlohmann::json::array(
        {{{"id", "call_1"},
          {"type", "function"},
          {"function", {{"name", "check_order_status"}, {"arguments", "{}"}}}}});
    reply_json(res, doc);
  };

  nlt::HttpBackend backend({.base_url = server.base_url()});
  auto r = backend.attempt(sample_request(true), 1);
  CHECK(r.content_text == "Assessment finished.\n");
  REQUIRE(r.tool_calls.size() == 1);
  CHECK(r.tool_calls[0].name == "check_order_status");
  CHECK(r.usage.state == nlt::TokenUsage::State::full);
  CHECK(r.usage.input_tokens == 563);
  CHECK(r.usage.output_tokens == 342);
  CHECK(r.usage.total_tokens == 905);
}

TEST_CASE("usage degrades gracefully: total-only and absent") {
  StubServer server;

  SUBCASE("total only") {
    server.on_request = [](const httplib::Request&, httplib::Response& res) {
      auto doc = ok_chat_body();
      doc["usage"] = {{"total_tokens", 1319}};
      reply_json(res, doc);
    };
    nlt::HttpBackend backend({.base_url = server.base_url()});
    auto r = backend.attempt(sample_request(false), 1);
    CHECK(r.usage.state == nlt::TokenUsage::State::partial);
    CHECK(r.usage.total_tokens == 1319);
  }

  SUBCASE("no usage object") {
    server.on_request = [](const httplib::Request&, httplib::Response& res) {
      auto doc = ok_chat_body();
      doc.erase("usage");
      reply_json(res, doc);
    };
    nlt::HttpBackend backend({.base_url = server.base_url()});
    auto r = backend.attempt(sample_request(false), 1);
    CHECK(r.usage.state == nlt::TokenUsage::State::unreported);
    CHECK(r.usage.total_tokens == 0);
  }
}

TEST_CASE("null content with tool calls is a structured-only reply, not an error") {
  StubServer server;
  server.on_request = [](const httplib::Request&, httplib::Response& res) {
    nlohmann::json call;
    call["function"]["name"] = "check_store_hours";
    nlohmann::json message;
    message["role"] = "assistant";
    message["content"] = nullptr;
    message["tool_calls"] = nlohmann::json::array({call});
    nlohmann::json doc;
    doc["choices"] = nlohmann::json::array({nlohmann::json{{"message", message}}});
    reply_json(res, doc);
  };
  nlt::HttpBackend backend({.base_url = server.base_url()});
  auto r = backend.attempt(sample_request(true), 1);
  CHECK(r.content_text.empty());
  REQUIRE(r.tool_calls.size() == 1);
  CHECK(r.tool_calls[0].name == "check_store_hours");
}

TEST_CASE("status codes map onto the contracted error kinds") {
  StubServer server;
  int status = 200;
  server.on_request = [&status](const httplib::Request&, httplib::Response& res) {
    reply_json(res, nlohmann::json{{"error", "scripted"}}, status);
  };
  nlt::HttpBackend backend({.base_url = server.base_url()});

  auto expect_kind = [&](int s, ProviderErrorKind kind) {
    status = s;
    try {
      (void)backend.attempt(sample_request(false), 1);
      FAIL("expected ProviderError for HTTP " << s);
    } catch (const nlt::ProviderError& e) {
      CAPTURE(s);
      CHECK(e.kind() == kind);
    }
  };

  expect_kind(401, ProviderErrorKind::auth_error);
  expect_kind(403, ProviderErrorKind::auth_error);
  expect_kind(429, ProviderErrorKind::rate_limit);
  expect_kind(408, ProviderErrorKind::timeout);
  expect_kind(500, ProviderErrorKind::server_error);
  expect_kind(503, ProviderErrorKind::server_error);
  expect_kind(404, ProviderErrorKind::configuration);
  expect_kind(422, ProviderErrorKind::configuration);
}

TEST_CASE("unusable payloads are malformed_response") {
  StubServer server;

  SUBCASE("not JSON") {
    server.on_request = [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>proxy error</html>", "text/html");
    };
    nlt::HttpBackend backend({.base_url = server.base_url()});
    try {
      (void)backend.attempt(sample_request(false), 1);
      FAIL("expected ProviderError");
    } catch (const nlt::ProviderError& e) {
      CHECK(e.kind() == ProviderErrorKind::malformed_response);
    }
  }

  SUBCASE("no choices") {
    server.on_request = [](const httplib::Request&, httplib::Response& res) {
      reply_json(res, nlohmann::json{{"object", "chat.completion"}});
    };
    nlt::HttpBackend backend({.base_url = server.base_url()});
    try {
      (void)backend.attempt(sample_request(false), 1);
      FAIL("expected ProviderError");
    } catch (const nlt::ProviderError& e) {
      CHECK(e.kind() == ProviderErrorKind::malformed_response);
    }
  }

  SUBCASE("empty choices array") {
    server.on_request = [](const httplib::Request&, httplib::Response& res) {
      reply_json(res, nlohmann::json{{"choices", nlohmann::json::array()}});
    };
    nlt::HttpBackend backend({.base_url = server.base_url()});
    CHECK_THROWS_AS((void)backend.attempt(sample_request(false), 1), nlt::ProviderError);
  }
}

TEST_CASE("the Authorization header is sent iff a key is configured") {
  StubServer server;
  std::string seen_auth = "unset";
  server.on_request = [&seen_auth](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.has_header("Authorization") ? req.get_header_value("Authorization") : "";
    reply_json(res, ok_chat_body());
  };

  nlt::HttpBackend with_key({.base_url = server.base_url(), .api_key = "sk-test-123"});
  (void)with_key.attempt(sample_request(false), 1);
  CHECK(seen_auth == "Bearer sk-test-123");

  nlt::HttpBackend without_key({.base_url = server.base_url()});
  (void)without_key.attempt(sample_request(false), 1);
  CHECK(seen_auth.empty());
}

TEST_CASE("a path prefix in base_url lands in front of the chat path") {
  StubServer server;
  std::string seen_path;
  server.on_request = [&seen_path](const httplib::Request& req, httplib::Response& res) {
    seen_path = req.path;
    reply_json(res, ok_chat_body());
  };

  nlt::HttpBackend backend({.base_url = server.base_url() + "/v1"});
  (void)backend.attempt(sample_request(false), 1);
  CHECK(seen_path == "/v1/chat/completions");

  // A trailing slash on the prefix must not double up.
  nlt::HttpBackend slashed({.base_url = server.base_url() + "/v1/"});
  (void)slashed.attempt(sample_request(false), 1);
  CHECK(seen_path == "/v1/chat/completions");
}

TEST_CASE("transient 429s succeed under the retry loop") {
  StubServer server;
  std::atomic<int> calls{0};
  server.on_request = [&calls](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2)
      reply_json(res, nlohmann::json{{"error", "slow down"}}, 429);
    else
      reply_json(res, ok_chat_body());
  };

  nlt::HttpBackend backend({.base_url = server.base_url()});
  auto r = nlt::complete(backend, sample_request(false), {}, nlt::no_sleep());
  CHECK(r.attempts == 3);
  CHECK(calls == 3);
  CHECK(r.content_text == "Assessment finished.\n");
}

TEST_CASE("auth failures stop the retry loop on the first attempt") {
  StubServer server;
  server.on_request = [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, nlohmann::json{{"error", "bad key"}}, 401);
  };
  nlt::HttpBackend backend({.base_url = server.base_url(), .api_key = "sk-wrong"});
  try {
    (void)nlt::complete(backend, sample_request(false), {}, nlt::no_sleep());
    FAIL("expected ProviderError");
  } catch (const nlt::ProviderError& e) {
    CHECK(e.kind() == ProviderErrorKind::auth_error);
  }
  CHECK(server.hits == 1);
}

TEST_CASE("an unreachable host is a transport-family error") {
  // Port 9 on loopback: nothing listens there.
  nlt::HttpBackend backend({.base_url = "http://127.0.0.1:9", .connect_timeout_ms = 200});
  try {
    (void)backend.attempt(sample_request(false), 1);
    FAIL("expected ProviderError");
  } catch (const nlt::ProviderError& e) {
    CHECK((e.kind() == ProviderErrorKind::transport_error ||
           e.kind() == ProviderErrorKind::timeout));
  }
}

TEST_CASE("base_url validation happens at construction") {
  CHECK_THROWS_AS(nlt::HttpBackend({.base_url = "127.0.0.1:8080"}), nlt::ProviderError);
  CHECK_THROWS_AS(nlt::HttpBackend({.base_url = "ftp://host"}), nlt::ProviderError);
#ifndef NLT_HAVE_OPENSSL
  CHECK_THROWS_AS(nlt::HttpBackend({.base_url = "https://api.example.com"}),
                  nlt::ProviderError);
#else
  CHECK_NOTHROW(nlt::HttpBackend({.base_url = "https://api.example.com"}));
#endif
}
