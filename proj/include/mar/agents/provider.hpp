#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mar::agents {

struct ImagePart {
    std::string ref;  // stable identifier rendered into the flattened prompt
    std::string mime;
    std::string payload;
    bool operator==(const ImagePart&) const = default;
};

using UserPart = std::variant<std::string, ImagePart>;

inline constexpr int kDefaultMaxTokens = 2048;
inline constexpr double kDefaultTemperature = 0.0;

struct ModelRequest {
    std::string role;  // "manager", "operator", "reflector", "notetaker"
    std::string system_text;
    std::vector<UserPart> user_parts;
    int max_tokens = kDefaultMaxTokens;
    double temperature = kDefaultTemperature;

    // System text, then every user part; images appear as "[image <ref>]".
    std::string flattened() const;
    std::string user_text() const;
    std::size_t image_count() const;
};

struct TokenUsage {
    long long input = 0;
    long long output = 0;
    TokenUsage& operator+=(const TokenUsage& o) {
        input += o.input;
        output += o.output;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

struct ModelResponse {
    std::string text;
    TokenUsage usage;
};

std::size_t whitespace_tokens(std::string_view text);

class ModelProvider {
public:
    virtual ~ModelProvider() = default;
    virtual std::string name() const = 0;
    // Throws ProviderError (or a subclass) on transport failures.
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

struct ScriptStep {
    std::string match;
    std::string response;
};

using ProviderScript = std::vector<ScriptStep>;

// JSON list of {"match": str, "response": str}.
ProviderScript load_script(const std::filesystem::path& file);

// Replays canned responses in order. Each call must find the next step's matcher
// in the flattened prompt.
class ScriptedProvider final : public ModelProvider {
public:
    explicit ScriptedProvider(ProviderScript script) : script_(std::move(script)) {}

    std::string name() const override { return "scripted"; }
    ModelResponse complete(const ModelRequest& request) override;

    std::size_t consumed() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mu_;
    ProviderScript script_;
    std::size_t cursor_ = 0;
};

// POST {base}/complete with the request fields as JSON; expects {"text": str} and
// optional "input_tokens"/"output_tokens". Transport errors and 5xx/429 answers are
// retried with exponential backoff; malformed bodies are not.
class HttpProvider final : public ModelProvider {
public:
    struct Options {
        int retries = 3;
        int backoff_ms = 500;
        int timeout_seconds = 120;
    };

    HttpProvider(std::string base_url, std::string api_key);
    HttpProvider(std::string base_url, std::string api_key, Options options);

    // Reads MAR_PROVIDER_URL and MAR_PROVIDER_KEY.
    static HttpProvider from_env();

    std::string name() const override { return "http:" + base_url_; }
    ModelResponse complete(const ModelRequest& request) override;

private:
    std::string base_url_;
    std::string api_key_;
    Options options_;
};

}  // namespace mar::agents
