#pragma once

#include <string>

#include "nsar/errors.hpp"

namespace nsar::detail {

struct ParsedUrl {
    std::string host;
    int port = 80;
    std::string path = "/";
};

/// Accepts http://host[:port][/path]. TLS endpoints should sit behind a
/// local gateway; the clients speak plain HTTP.
inline ParsedUrl parse_http_url(const std::string& url) {
    std::string rest = url;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) == 0) {
        rest = rest.substr(scheme.size());
    } else if (rest.rfind("https://", 0) == 0) {
        throw InvalidArgumentError(
            "https endpoints are not supported directly; use a local gateway: " + url);
    }
    ParsedUrl out;
    std::size_t slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    if (slash != std::string::npos) out.path = rest.substr(slash);
    std::size_t colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
    } else {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    }
    if (out.host.empty()) throw InvalidArgumentError("endpoint URL has no host: " + url);
    return out;
}

inline std::string bearer_token(const std::string& literal, const std::string& env_name) {
    if (!literal.empty()) return literal;
    if (!env_name.empty()) {
        if (const char* v = std::getenv(env_name.c_str()); v != nullptr && *v != '\0') {
            return v;
        }
    }
    return {};
}

}  // namespace nsar::detail
