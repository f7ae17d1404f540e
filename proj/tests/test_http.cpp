#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cliniqa/embedding.hpp"
#include "cliniqa/evaluation.hpp"
#include "cliniqa/generation.hpp"

using namespace cliniqa;
using json = nlohmann::json;

namespace {

/// Starts an httplib server on an ephemeral localhost port.
class TestServer {
public:
    explicit TestServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~TestServer() {
        server_.stop();
        thread_.join();
    }

    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_SUITE("http") {

TEST_CASE("http embedding provider round trip") {
    TestServer server([](httplib::Server& s) {
        s.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& input : body.at("inputs")) {
                const auto text = input.get<std::string>();
                vectors.push_back(json::array({static_cast<double>(text.size()), 1.0, 0.0, 0.0}));
            }
            res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
        });
    });

    HttpProvider provider(server.url("/embed"), "", 4);
    const Embedding v = provider.embed("abcd");
    CHECK(v == Embedding{4.0, 1.0, 0.0, 0.0});

    const auto batch = provider.embed_batch({"a", "ab"});
    REQUIRE(batch.size() == 2);
    CHECK(batch[0][0] == 1.0);
    CHECK(batch[1][0] == 2.0);
}

TEST_CASE("http embedding provider rejects mismatched dimensions") {
    TestServer server([](httplib::Server& s) {
        s.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"vectors", {{1.0, 0.0}}}}.dump(), "application/json");
        });
    });
    HttpProvider provider(server.url("/embed"), "", 1024);
    CHECK_THROWS_WITH_AS(provider.embed("text"), doctest::Contains("dimension mismatch"),
                         EmbeddingError);
}

TEST_CASE("http embedding provider propagates endpoint failures") {
    TestServer server([](httplib::Server& s) {
        s.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
    });
    HttpProvider provider(server.url("/embed"), "", 4);
    CHECK_THROWS_WITH_AS(provider.embed("text"), doctest::Contains("status 500"), EmbeddingError);
}

TEST_CASE("http llm client posts the completion contract") {
    std::atomic<bool> saw_auth{false};
    json received;
    std::mutex mu;
    TestServer server([&](httplib::Server& s) {
        s.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu);
                received = json::parse(req.body);
            }
            if (req.get_header_value("Authorization") == "Bearer token-123") saw_auth = true;
            res.set_content(json{{"text", "Repaired |1|."}}.dump(), "application/json");
        });
    });

    HttpLlmClient client(server.url("/v1/complete"), "token-123", "test-model");
    const std::string out = client.complete({"the prompt", 200, 0.001});
    CHECK(out == "Repaired |1|.");
    CHECK(saw_auth.load());
    std::lock_guard lock(mu);
    CHECK(received.at("model") == "test-model");
    CHECK(received.at("prompt") == "the prompt");
    CHECK(received.at("max_tokens") == 200);
    CHECK(received.at("temperature").get<double>() == doctest::Approx(0.001));
}

TEST_CASE("unreachable llm endpoint reports an error") {
    // nothing listens on port 1
    HttpLlmClient client("http://127.0.0.1:1/complete", "", "m");
    CHECK_THROWS_WITH_AS(client.complete({"p", 10, 0.0}), doctest::Contains("unreachable"),
                         GenerationError);
}

TEST_CASE("external scorer hook") {
    TestServer server([](httplib::Server& s) {
        s.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            REQUIRE(body.contains("candidate"));
            REQUIRE(body.contains("reference"));
            res.set_content(json{{"score", 0.42}}.dump(), "application/json");
        });
    });
    ExternalScorer scorer(server.url("/score"));
    CHECK(scorer.score("candidate text", "reference text") == doctest::Approx(0.42));
}

TEST_CASE("external scorer rejects malformed replies") {
    TestServer server([](httplib::Server& s) {
        s.Post("/score", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{}", "application/json");
        });
    });
    ExternalScorer scorer(server.url("/score"));
    CHECK_THROWS_AS(scorer.score("a", "b"), EvaluationError);
}

} // TEST_SUITE
