// Internal JSON conversions for gateway types.
#pragma once

#include "revieweval/gateway.hpp"

#include <json.hpp>

namespace revieweval {

inline nlohmann::json to_json_value(const ChatRequest& r) {
    return {{"template_id", r.template_id},
            {"variables", r.variables},
            {"temperature", r.temperature},
            {"max_output_tokens", r.max_output_tokens}};
}

inline ChatRequest chat_request_from_json(const nlohmann::json& j) {
    ChatRequest r;
    r.template_id = j.at("template_id").get<std::string>();
    r.variables = j.value("variables", std::map<std::string, std::string>{});
    r.temperature = j.value("temperature", 0.0);
    r.max_output_tokens = j.value("max_output_tokens", std::size_t{0});
    return r;
}

inline nlohmann::json to_json_value(const ChatResponse& r) {
    nlohmann::json j = {{"text", r.text},
                        {"backend_id", r.backend_id},
                        {"usage",
                         {{"prompt_tokens", r.usage.prompt_tokens},
                          {"completion_tokens", r.usage.completion_tokens}}}};
    if (r.truncated) j["truncated"] = true;
    return j;
}

inline ChatResponse chat_response_from_json(const nlohmann::json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.backend_id = j.value("backend_id", std::string{});
    if (auto it = j.find("usage"); it != j.end()) {
        r.usage.prompt_tokens = it->value("prompt_tokens", std::size_t{0});
        r.usage.completion_tokens = it->value("completion_tokens", std::size_t{0});
    }
    r.truncated = j.value("truncated", false);
    return r;
}

}  // namespace revieweval
