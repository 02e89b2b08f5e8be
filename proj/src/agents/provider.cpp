#include "mar/agents/provider.hpp"

#include "mar/core/digest.hpp"
#include "mar/core/error.hpp"
#include "mar/core/url.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace mar::agents {

using nlohmann::json;

std::string ModelRequest::user_text() const {
    std::string out;
    for (const auto& part : user_parts) {
        if (!out.empty()) out += '\n';
        if (const auto* text = std::get_if<std::string>(&part)) out += *text;
        else out += "[image " + std::get<ImagePart>(part).ref + "]";
    }
    return out;
}

std::string ModelRequest::flattened() const { return system_text + "\n\n" + user_text(); }

std::size_t ModelRequest::image_count() const {
    std::size_t n = 0;
    for (const auto& part : user_parts) n += std::holds_alternative<ImagePart>(part) ? 1 : 0;
    return n;
}

std::size_t whitespace_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

ProviderScript load_script(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open provider script " + file.string());
    try {
        ProviderScript script;
        for (const auto& j : json::parse(in))
            script.push_back({j.at("match").get<std::string>(), j.at("response").get<std::string>()});
        return script;
    } catch (const json::exception& e) {
        throw Error("malformed provider script " + file.string() + ": " + e.what());
    }
}

ModelResponse ScriptedProvider::complete(const ModelRequest& request) {
    std::lock_guard lock(mu_);
    if (cursor_ >= script_.size())
        throw ScriptExhausted("provider script exhausted after " + std::to_string(script_.size()) + " responses");
    const ScriptStep& step = script_[cursor_];
    const std::string prompt = request.flattened();
    if (prompt.find(step.match) == std::string::npos)
        throw MatcherMiss("script step " + std::to_string(cursor_) + " (" + request.role + "): prompt lacks '" +
                          step.match + "'");
    ++cursor_;
    return ModelResponse{step.response,
                         TokenUsage{static_cast<long long>(whitespace_tokens(prompt)),
                                    static_cast<long long>(whitespace_tokens(step.response))}};
}

std::size_t ScriptedProvider::consumed() const {
    std::lock_guard lock(mu_);
    return cursor_;
}

std::size_t ScriptedProvider::remaining() const {
    std::lock_guard lock(mu_);
    return script_.size() - cursor_;
}

HttpProvider::HttpProvider(std::string base_url, std::string api_key)
    : HttpProvider(std::move(base_url), std::move(api_key), Options{}) {}

HttpProvider::HttpProvider(std::string base_url, std::string api_key, Options options)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), options_(options) {}

HttpProvider HttpProvider::from_env() {
    const char* url = std::getenv("MAR_PROVIDER_URL");
    if (url == nullptr || *url == '\0') throw ProviderError("MAR_PROVIDER_URL is not set");
    const char* key = std::getenv("MAR_PROVIDER_KEY");
    return HttpProvider(url, key ? key : "");
}

ModelResponse HttpProvider::complete(const ModelRequest& request) {
    json parts = json::array();
    for (const auto& part : request.user_parts) {
        if (const auto* text = std::get_if<std::string>(&part)) {
            parts.push_back({{"type", "text"}, {"text", *text}});
        } else {
            const auto& img = std::get<ImagePart>(part);
            parts.push_back({{"type", "image"}, {"ref", img.ref}, {"mime", img.mime}, {"data", base64_encode(img.payload)}});
        }
    }
    const json body = {{"role", request.role},
                       {"system", request.system_text},
                       {"user_parts", parts},
                       {"max_tokens", request.max_tokens},
                       {"temperature", request.temperature}};
    const std::string payload = body.dump();

    const auto ep = HttpEndpoint::parse(base_url_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
        httplib::Client cli(ep.origin);
        cli.set_connection_timeout(options_.timeout_seconds);
        cli.set_read_timeout(options_.timeout_seconds);
        auto res = cli.Post(ep.at("/complete"), headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw ProviderError("provider answered HTTP " + std::to_string(res->status));
        try {
            auto j = json::parse(res->body);
            ModelResponse out;
            out.text = j.at("text").get<std::string>();
            out.usage.input = j.value("input_tokens", static_cast<long long>(whitespace_tokens(request.flattened())));
            out.usage.output = j.value("output_tokens", static_cast<long long>(whitespace_tokens(out.text)));
            return out;
        } catch (const json::exception& e) {
            throw ResponseFormatError(std::string("provider body is not {\"text\": ...}: ") + e.what());
        }
    }
    throw ProviderError("provider " + base_url_ + " failed after " + std::to_string(options_.retries + 1) +
                        " attempts: " + last_error);
}

}  // namespace mar::agents
