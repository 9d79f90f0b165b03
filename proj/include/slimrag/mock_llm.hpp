#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace slimrag {

struct MockRule {
    std::string contains;
    std::string response;
};

// Scripted chat behavior: the first rule whose pattern occurs in the prompt
// wins, otherwise default_response. Stateless, so identical requests always
// produce identical responses.
struct MockScript {
    std::vector<MockRule> rules;
    std::string default_response;
    std::size_t embedding_dim = 32;
    int latency_ms = 0;

    static MockScript from_json(const std::string& json_text);
    static MockScript load(const std::string& path);

    const std::string& respond(const std::string& prompt) const;
};

// Deterministic unit vector derived from a hash of the text. Same text and
// dim always produce the same vector, on any platform.
std::vector<float> mock_embedding(const std::string& text, std::size_t dim);

// In-process server speaking the gateway's chat/embeddings protocol.
// Chat usage reports exact whitespace token counts.
class MockLlmServer {
public:
    explicit MockLlmServer(MockScript script);
    ~MockLlmServer();

    MockLlmServer(const MockLlmServer&) = delete;
    MockLlmServer& operator=(const MockLlmServer&) = delete;

    // Binds an OS-assigned free port and serves in a background thread.
    // Returns the port. For tests.
    int start_any();

    // Binds the given port and serves in a background thread.
    // Returns false when the port cannot be bound.
    bool start(int port);

    // Serves on the calling thread until stop(). Returns false when the
    // port cannot be bound.
    bool serve_forever(int port);

    void stop();

    int port() const;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace slimrag
