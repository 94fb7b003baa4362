// OpenAI-compatible chat completion client.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "truthkit/error.hpp"
#include "truthkit/io.hpp"
#include "truthkit/llm.hpp"

namespace truthkit {

HttpChatProvider::HttpChatProvider(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::unique_ptr<HttpChatProvider> HttpChatProvider::from_environment() {
  const char* key = std::getenv("TRUTHKIT_API_KEY");
  if (!key || !*key) key = std::getenv("OPENAI_API_KEY");
  if (!key || !*key)
    throw Error(ErrorCode::ProviderError, "set TRUTHKIT_API_KEY (or OPENAI_API_KEY) for live annotation");
  const char* base = std::getenv("TRUTHKIT_API_BASE");
  return std::make_unique<HttpChatProvider>(base && *base ? base : "https://api.openai.com", key);
}

Completion HttpChatProvider::complete(const CompletionRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_bearer_token_auth(api_key_);

  const io::json body = {{"model", request.model},
                         {"temperature", request.temperature},
                         {"messages", io::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  auto response = client.Post("/v1/chat/completions", body.dump(), "application/json");
  if (!response) {
    throw Error(ErrorCode::ProviderError, "request to " + base_url_ + " failed: " + httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw Error(ErrorCode::ProviderError,
                "provider returned HTTP " + std::to_string(response->status) + ": " + response->body.substr(0, 200));
  }
  try {
    const auto j = io::json::parse(response->body);
    Completion c;
    c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto usage = j.find("usage"); usage != j.end()) {
      c.input_tokens = usage->value("prompt_tokens", 0LL);
      c.output_tokens = usage->value("completion_tokens", 0LL);
    }
    return c;
  } catch (const io::json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("malformed provider response: ") + e.what());
  }
}

}  // namespace truthkit
