#include "slimrag/gateway.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/text.hpp"
#include "slimrag/vecmath.hpp"

namespace slimrag {

using nlohmann::json;

const char* role_name(Role role) {
    switch (role) {
        case Role::proxy: return "proxy";
        case Role::judge: return "judge";
        case Role::rewriter: return "rewriter";
        case Role::reader: return "reader";
        case Role::embedder: return "embedder";
    }
    return "unknown";
}

Role role_from_name(const std::string& name) {
    if (name == "proxy") return Role::proxy;
    if (name == "judge") return Role::judge;
    if (name == "rewriter") return Role::rewriter;
    if (name == "reader") return Role::reader;
    if (name == "embedder") return Role::embedder;
    throw InvalidInput("unknown model role: " + name);
}

namespace {

struct ParsedUrl {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string prefix;  // path prefix without trailing slash, may be empty
};

ParsedUrl parse_base_url(const std::string& url) {
    ParsedUrl out;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidInput("base_url missing scheme: " + url);
    out.scheme = url.substr(0, scheme_end);
    if (out.scheme != "http" && out.scheme != "https")
        throw InvalidInput("unsupported scheme in base_url: " + url);

    std::string rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    std::string authority = rest.substr(0, path_start);
    if (path_start != std::string::npos) {
        out.prefix = rest.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        out.host = authority.substr(0, colon);
        try {
            out.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw InvalidInput("bad port in base_url: " + url);
        }
    } else {
        out.host = authority;
        out.port = out.scheme == "https" ? 443 : 80;
    }
    if (out.host.empty()) throw InvalidInput("base_url missing host: " + url);
    return out;
}

const char* message_role_name(ChatMessage::Kind kind) {
    switch (kind) {
        case ChatMessage::Kind::system: return "system";
        case ChatMessage::Kind::user: return "user";
        case ChatMessage::Kind::assistant: return "assistant";
    }
    return "user";
}

// Counting semaphore; std::counting_semaphore lacks a portable max here.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard lock(mu_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int count_;
};

struct SlotGuard {
    Semaphore& sem;
    explicit SlotGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

struct Gateway::Impl {
    GatewayOptions opts;
    std::mutex sem_mu;
    std::map<std::string, std::unique_ptr<Semaphore>> sems;

    Semaphore& semaphore_for(const std::string& base_url) {
        std::lock_guard lock(sem_mu);
        auto& slot = sems[base_url];
        if (!slot) slot = std::make_unique<Semaphore>(opts.per_endpoint_concurrency);
        return *slot;
    }

    std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url,
                                                 const ModelEndpoint& endpoint) {
        auto cli = std::make_unique<httplib::Client>(
            url.scheme + "://" + url.host + ":" + std::to_string(url.port));
        cli->set_connection_timeout(0, opts.connect_timeout_ms * 1000);
        cli->set_read_timeout(opts.read_timeout_ms / 1000,
                              (opts.read_timeout_ms % 1000) * 1000);
        if (!endpoint.api_key_env.empty()) {
            const char* key = std::getenv(endpoint.api_key_env.c_str());
            if (key && *key) cli->set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        }
        return cli;
    }

    // Runs the request up to max_attempts times. Returns the final body.
    std::string post_json(const ModelEndpoint& endpoint, const std::string& path,
                          const std::string& body) {
        ParsedUrl url = parse_base_url(endpoint.base_url);
        SlotGuard slot(semaphore_for(endpoint.base_url));
        auto cli = make_client(url, endpoint);

        int attempts = 0;
        int delay_ms = opts.backoff_initial_ms;
        std::string last_error;
        while (attempts < opts.max_attempts) {
            ++attempts;
            auto res = cli->Post(url.prefix + path, body, "application/json");
            if (res) {
                if (res->status >= 200 && res->status < 300) {
                    if (opts.debug_log)
                        std::fprintf(stderr, "[gateway] %s%s -> %d (%zu bytes)\n",
                                     endpoint.base_url.c_str(), path.c_str(),
                                     res->status, res->body.size());
                    return res->body;
                }
                if (!retryable_status(res->status))
                    throw ProtocolError("request to " + endpoint.base_url + path +
                                            " failed with status " + std::to_string(res->status),
                                        res->status, res->body);
                last_error = "status " + std::to_string(res->status);
            } else {
                last_error = httplib::to_string(res.error());
            }
            if (attempts < opts.max_attempts) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
        }
        throw TransportError("request to " + endpoint.base_url + path +
                                 " failed after " + std::to_string(attempts) +
                                 " attempts: " + last_error,
                             attempts);
    }
};

Gateway::Gateway(GatewayOptions opts) : impl_(std::make_unique<Impl>()) {
    impl_->opts = opts;
}

Gateway::~Gateway() = default;

const GatewayOptions& Gateway::options() const { return impl_->opts; }

ChatExchange Gateway::chat(const ModelEndpoint& endpoint,
                           const std::vector<ChatMessage>& messages,
                           const ChatParams& params) {
    if (messages.empty()) throw InvalidInput("chat called with no messages");
    if (params.max_tokens <= 0) throw InvalidInput("max_tokens must be positive");
    if (params.temperature < 0.0) throw InvalidInput("temperature must be non-negative");
    bool has_user = false;
    for (const auto& m : messages)
        if (m.role == ChatMessage::Kind::user) has_user = true;
    if (!has_user) throw InvalidInput("chat request needs at least one user message");

    json req;
    req["model"] = endpoint.model_name;
    req["temperature"] = params.temperature;
    req["max_tokens"] = params.max_tokens;
    auto& msgs = req["messages"] = json::array();
    for (const auto& m : messages)
        msgs.push_back({{"role", message_role_name(m.role)}, {"content", m.content}});

    std::string body = impl_->post_json(endpoint, "/chat/completions", req.dump());

    json resp;
    try {
        resp = json::parse(body);
    } catch (const json::exception& e) {
        throw DecodeError("chat response is not valid JSON: " + std::string(e.what()));
    }

    ChatExchange ex;
    ex.messages = messages;
    ex.temperature = params.temperature;
    ex.max_tokens = params.max_tokens;
    try {
        ex.response_text = resp.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw DecodeError("chat response missing choices[0].message.content");
    }

    if (resp.contains("usage") && resp["usage"].is_object() &&
        resp["usage"].contains("prompt_tokens") && resp["usage"].contains("completion_tokens")) {
        ex.prompt_tokens = resp["usage"]["prompt_tokens"].get<long>();
        ex.completion_tokens = resp["usage"]["completion_tokens"].get<long>();
    } else {
        long prompt = 0;
        for (const auto& m : messages) prompt += static_cast<long>(whitespace_tokens(m.content));
        ex.prompt_tokens = prompt;
        ex.completion_tokens = static_cast<long>(whitespace_tokens(ex.response_text));
        ex.approx_tokens = true;
    }
    return ex;
}

std::vector<std::vector<float>> Gateway::embed(const ModelEndpoint& endpoint,
                                               const std::vector<std::string>& texts) {
    if (texts.empty()) throw InvalidInput("embed called with no inputs");
    for (const auto& t : texts)
        if (t.empty()) throw InvalidInput("embed input must not be empty");

    json req;
    req["model"] = endpoint.model_name;
    req["input"] = texts;

    std::string body = impl_->post_json(endpoint, "/embeddings", req.dump());

    json resp;
    try {
        resp = json::parse(body);
    } catch (const json::exception& e) {
        throw DecodeError("embeddings response is not valid JSON: " + std::string(e.what()));
    }
    if (!resp.contains("data") || !resp["data"].is_array())
        throw DecodeError("embeddings response missing data array");
    if (resp["data"].size() != texts.size())
        throw IntegrityError("embeddings response has " + std::to_string(resp["data"].size()) +
                             " vectors for " + std::to_string(texts.size()) + " inputs");

    std::vector<std::vector<float>> out(texts.size());
    size_t dim = 0;
    for (const auto& item : resp["data"]) {
        size_t index;
        std::vector<float> vec;
        try {
            index = item.at("index").get<size_t>();
            vec = item.at("embedding").get<std::vector<float>>();
        } catch (const json::exception&) {
            throw DecodeError("embeddings response item missing index or embedding");
        }
        if (index >= out.size()) throw IntegrityError("embedding index out of range");
        if (dim == 0) dim = vec.size();
        if (vec.empty() || vec.size() != dim)
            throw IntegrityError("inconsistent embedding dimensions in response");
        out[index] = std::move(vec);
    }
    for (auto& vec : out) {
        if (vec.empty()) throw IntegrityError("embeddings response left an input without a vector");
        float norm = vecmath::normalize(vec);
        if (norm == 0.0f) throw IntegrityError("embedding vector has zero norm");
    }
    return out;
}

}  // namespace slimrag
