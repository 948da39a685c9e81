#include <chrono>
#include <cstdlib>

#ifdef REDLOOP_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "redloop/errors.hpp"
#include "redloop/llm.hpp"

namespace redloop {

using nlohmann::json;

BackendReply RemoteBackend::complete(LlmRole /*role*/, const std::string& prompt) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw ConfigError("remote model backend needs the API key in $" + config_.api_key_env);
    }

    json body = {
        {"model", config_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config_.temperature},
        {"response_format", json{{"type", "json_object"}}},
    };

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_sec);
    client.set_read_timeout(config_.timeout_sec);
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    if (!res) {
        throw BackendUnreachable("chat-completions endpoint unreachable: " +
                                 httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendUnreachable("chat-completions endpoint returned HTTP " +
                                 std::to_string(res->status) + ": " + res->body);
    }

    json reply_json;
    try {
        reply_json = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw BackendUnreachable(std::string("malformed chat-completions response: ") + e.what());
    }

    BackendReply reply;
    reply.latency_ms = elapsed;
    try {
        reply.text = reply_json.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendUnreachable(std::string("chat-completions response missing content: ") +
                                 e.what());
    }
    if (reply_json.contains("usage")) {
        const json& usage = reply_json["usage"];
        reply.tokens_in = usage.value("prompt_tokens", 0);
        reply.tokens_out = usage.value("completion_tokens", 0);
    }
    return reply;
}

}  // namespace redloop
