#include "slimrag/mock_llm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/rng.hpp"
#include "slimrag/text.hpp"

namespace slimrag {

using nlohmann::json;
using rng::splitmix64;

std::vector<float> mock_embedding(const std::string& text, std::size_t dim) {
    if (dim == 0) throw InvalidInput("embedding dimension must be positive");
    uint64_t state = rng::fnv1a64(text);
    std::vector<double> vals(dim);
    double sumsq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        uint64_t bits = splitmix64(state) >> 11;
        double u = static_cast<double>(bits) * 0x1.0p-53;
        vals[i] = 2.0 * u - 1.0;
        sumsq += vals[i] * vals[i];
    }
    if (sumsq == 0.0) {
        vals[0] = 1.0;
        sumsq = 1.0;
    }
    double inv = 1.0 / std::sqrt(sumsq);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(vals[i] * inv);
    return out;
}

MockScript MockScript::from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidInput("mock script is not valid JSON: " + std::string(e.what()));
    }
    MockScript script;
    if (doc.contains("rules")) {
        if (!doc["rules"].is_array()) throw InvalidInput("mock script rules must be an array");
        for (const auto& r : doc["rules"]) {
            MockRule rule;
            try {
                rule.contains = r.at("contains").get<std::string>();
                rule.response = r.at("response").get<std::string>();
            } catch (const json::exception&) {
                throw InvalidInput("mock script rule needs contains and response strings");
            }
            if (rule.contains.empty()) throw InvalidInput("mock script rule pattern is empty");
            script.rules.push_back(std::move(rule));
        }
    }
    if (doc.contains("default")) script.default_response = doc["default"].get<std::string>();
    if (doc.contains("embedding_dim")) {
        long dim = doc["embedding_dim"].get<long>();
        if (dim <= 0) throw InvalidInput("embedding_dim must be positive");
        script.embedding_dim = static_cast<std::size_t>(dim);
    }
    if (doc.contains("latency_ms")) {
        script.latency_ms = doc["latency_ms"].get<int>();
        if (script.latency_ms < 0) throw InvalidInput("latency_ms must be non-negative");
    }
    return script;
}

MockScript MockScript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mock script: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

const std::string& MockScript::respond(const std::string& prompt) const {
    for (const auto& rule : rules)
        if (prompt.find(rule.contains) != std::string::npos) return rule.response;
    return default_response;
}

struct MockLlmServer::Impl {
    MockScript script;
    httplib::Server server;
    std::thread worker;
    int bound_port = 0;

    void setup_routes() {
        server.Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            handle_chat(req, res);
        });
        server.Post("/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            handle_embeddings(req, res);
        });
    }

    void handle_chat(const httplib::Request& req, httplib::Response& res) {
        if (script.latency_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(script.latency_ms));
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"bad json"})", "application/json");
            return;
        }
        std::string prompt;
        if (body.contains("messages") && body["messages"].is_array()) {
            for (const auto& m : body["messages"]) {
                if (!prompt.empty()) prompt += "\n";
                if (m.contains("content") && m["content"].is_string())
                    prompt += m["content"].get<std::string>();
            }
        }
        const std::string& reply = script.respond(prompt);
        json out;
        out["id"] = "mock-1";
        out["object"] = "chat.completion";
        out["model"] = body.value("model", "mock");
        out["choices"] = json::array({json{
            {"index", 0},
            {"message", json{{"role", "assistant"}, {"content", reply}}},
            {"finish_reason", "stop"},
        }});
        long ptok = static_cast<long>(whitespace_tokens(prompt));
        long ctok = static_cast<long>(whitespace_tokens(reply));
        out["usage"] = json{{"prompt_tokens", ptok},
                            {"completion_tokens", ctok},
                            {"total_tokens", ptok + ctok}};
        res.set_content(out.dump(), "application/json");
    }

    void handle_embeddings(const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"bad json"})", "application/json");
            return;
        }
        std::vector<std::string> inputs;
        if (body.contains("input")) {
            if (body["input"].is_string()) {
                inputs.push_back(body["input"].get<std::string>());
            } else if (body["input"].is_array()) {
                for (const auto& item : body["input"])
                    if (item.is_string()) inputs.push_back(item.get<std::string>());
            }
        }
        if (inputs.empty()) {
            res.status = 400;
            res.set_content(R"({"error":"input required"})", "application/json");
            return;
        }
        json data = json::array();
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto vec = mock_embedding(inputs[i], script.embedding_dim);
            data.push_back(json{{"object", "embedding"},
                                {"index", i},
                                {"embedding", vec}});
        }
        json out;
        out["object"] = "list";
        out["model"] = body.value("model", "mock-embed");
        out["data"] = std::move(data);
        res.set_content(out.dump(), "application/json");
    }
};

MockLlmServer::MockLlmServer(MockScript script) : impl_(std::make_unique<Impl>()) {
    impl_->script = std::move(script);
    impl_->setup_routes();
}

MockLlmServer::~MockLlmServer() { stop(); }

int MockLlmServer::start_any() {
    int port = impl_->server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw IoError("mock server could not bind a port");
    impl_->bound_port = port;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

bool MockLlmServer::start(int port) {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) return false;
    impl_->bound_port = port;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return true;
}

bool MockLlmServer::serve_forever(int port) {
    if (!impl_->server.bind_to_port("0.0.0.0", port)) return false;
    impl_->bound_port = port;
    return impl_->server.listen_after_bind();
}

void MockLlmServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

int MockLlmServer::port() const { return impl_->bound_port; }

std::string MockLlmServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->bound_port);
}

}  // namespace slimrag
