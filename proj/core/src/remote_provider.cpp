#include <sstream>

#include "nsar/providers.hpp"

#include "http_util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace nsar {

RemoteEmbeddingProvider::RemoteEmbeddingProvider(Options opts)
    : opts_(std::move(opts)) {
    auto url = detail::parse_http_url(opts_.endpoint_url);
    host_ = url.host;
    port_ = url.port;
    path_ = url.path;
    identity_ = "remote/" + opts_.model + "@" + host_ + ":" + std::to_string(port_);
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(
    std::span<const std::string> texts) {
    nlohmann::json body;
    body["model"] = opts_.model;
    body["input"] = nlohmann::json::array();
    for (const std::string& t : texts) body["input"].push_back(t);

    httplib::Client client(host_, port_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
    client.set_read_timeout(secs.count(), 0);
    client.set_connection_timeout(secs.count(), 0);
    httplib::Headers headers;
    std::string token = detail::bearer_token(opts_.api_key, opts_.api_key_env);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("embedding request failed: " +
                                httplib::to_string(res.error()),
                            /*transient=*/true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw ProviderError("embedding endpoint returned " +
                                std::to_string(res->status),
                            /*transient=*/true);
    }
    if (res->status != 200) {
        throw ProviderError("embedding endpoint returned " +
                                std::to_string(res->status) + ": " + res->body,
                            /*transient=*/false);
    }

    std::vector<EmbeddingVector> out(texts.size());
    try {
        nlohmann::json parsed = nlohmann::json::parse(res->body);
        for (const auto& item : parsed.at("data")) {
            std::size_t index = item.at("index").get<std::size_t>();
            if (index >= out.size()) {
                throw ProviderError("embedding index out of range", false);
            }
            out[index].values = item.at("embedding").get<std::vector<float>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what(),
                            false);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].values.empty()) {
            throw ProviderError("missing embedding for input " + std::to_string(i),
                                false);
        }
    }
    return out;
}

}  // namespace nsar
