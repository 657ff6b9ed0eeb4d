#ifndef FUZZDIAG_HTTP_SINK_HPP
#define FUZZDIAG_HTTP_SINK_HPP

// HTTP POST transport for EMAIL/SMS gateways. Kept apart from alerting.hpp
// so only binaries that deliver over HTTP pull in the client.

#include <cstdlib>
#include <string>
#include <utility>

#include <httplib.h>

#include "fuzzdiag/alerting.hpp"
#include "fuzzdiag/errors.hpp"

namespace fuzzdiag {

/// POSTs the serialized event as text/plain to `url` (http://host[:port]/path).
/// When `auth_env` names an environment variable, its value is sent as a
/// bearer token.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::string url, std::string auth_env = {}, int timeout_sec = 5)
        : auth_env_(std::move(auth_env)), timeout_sec_(timeout_sec) {
        const auto scheme = url.find("://");
        if (scheme == std::string::npos || url.substr(0, scheme) != "http")
            throw ConfigError("http sink url must start with http://");
        const auto slash = url.find('/', scheme + 3);
        base_ = slash == std::string::npos ? url : url.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : url.substr(slash);
        if (base_.size() <= scheme + 3) throw ConfigError("http sink url has no host");
    }

    bool deliver(const std::string& payload, std::string& error) override {
        httplib::Client cli(base_);
        cli.set_connection_timeout(timeout_sec_, 0);
        cli.set_read_timeout(timeout_sec_, 0);
        httplib::Headers headers;
        if (!auth_env_.empty()) {
            if (const char* tok = std::getenv(auth_env_.c_str()))
                headers.emplace("Authorization", std::string("Bearer ") + tok);
        }
        auto res = cli.Post(path_, headers, payload, "text/plain");
        if (!res) {
            error = "http: " + httplib::to_string(res.error());
            return false;
        }
        if (res->status < 200 || res->status >= 300) {
            error = "http status " + std::to_string(res->status);
            return false;
        }
        return true;
    }

private:
    std::string base_;
    std::string path_;
    std::string auth_env_;
    int timeout_sec_;
};

}  // namespace fuzzdiag

#endif  // FUZZDIAG_HTTP_SINK_HPP
