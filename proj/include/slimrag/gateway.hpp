#pragma once

#include <memory>
#include <string>
#include <vector>

namespace slimrag {

enum class Role { proxy, judge, rewriter, reader, embedder };

const char* role_name(Role role);
Role role_from_name(const std::string& name);

// A remote chat-completion or embedding endpoint. Value object; the API key
// is never stored here, only the name of the environment variable holding it.
struct ModelEndpoint {
    Role role = Role::reader;
    std::string base_url;
    std::string model_name;
    std::string api_key_env;
    double cost_weight = 1.0;  // per-token cost relative to the reader
};

struct ChatMessage {
    enum class Kind { system, user, assistant };
    Kind role = Kind::user;
    std::string content;
};

struct ChatParams {
    double temperature = 0.7;
    int max_tokens = 1024;
};

// One completed request/response round trip with token accounting.
struct ChatExchange {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 0;
    std::string response_text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool approx_tokens = false;  // true when usage came from the whitespace fallback
};

struct GatewayOptions {
    int max_attempts = 3;
    int backoff_initial_ms = 500;
    int per_endpoint_concurrency = 4;
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 120000;
    bool debug_log = false;  // request/response summaries to stderr, keys redacted
};

// Shared client for every model role. Thread safe; concurrent requests to
// one endpoint are capped by per_endpoint_concurrency.
class Gateway {
public:
    explicit Gateway(GatewayOptions opts = {});
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // POST {base_url}/chat/completions. Retries transient failures
    // (connect errors, 429, 5xx) with exponential backoff.
    ChatExchange chat(const ModelEndpoint& endpoint,
                      const std::vector<ChatMessage>& messages,
                      const ChatParams& params);

    // POST {base_url}/embeddings. Returned vectors are L2-normalized
    // client side regardless of what the server produced.
    std::vector<std::vector<float>> embed(const ModelEndpoint& endpoint,
                                          const std::vector<std::string>& texts);

    const GatewayOptions& options() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace slimrag
