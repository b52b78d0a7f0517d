#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "convograph/errors.hpp"

namespace convograph::internal {

struct UrlParts {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint URL must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// POST a JSON body and parse the JSON reply; `what` names the provider in
// error messages, `api_key_env` the env var holding a bearer token.
inline nlohmann::json post_json(const std::string& endpoint,
                                const nlohmann::json& body,
                                const char* api_key_env, const char* what) {
  const UrlParts parts = split_url(endpoint);
  httplib::Client client(parts.base);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env))
    headers.emplace("Authorization", std::string("Bearer ") + key);
  auto res = client.Post(parts.path, headers, body.dump(), "application/json");
  if (!res)
    throw ProviderError(std::string(what) + " unreachable: " + endpoint);
  if (res->status != 200)
    throw ProviderError(std::string(what) + " returned HTTP " +
                        std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError(std::string(what) + " sent invalid JSON: " + e.what());
  }
}

}  // namespace convograph::internal
