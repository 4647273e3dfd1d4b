#pragma once

// Thin JSON-over-HTTP helper on top of cpp-httplib. Every outbound request
// bumps a process-wide counter so offline runs can prove they made none.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

namespace affectsim::http {

class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, int status = 0, bool transient = true)
        : std::runtime_error(what), status_(status), transient_(transient) {}
    int status() const { return status_; }
    bool transient() const { return transient_; }

private:
    int status_;
    bool transient_;
};

inline std::atomic<std::uint64_t>& request_counter() {
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}

struct Url {
    std::string scheme_host_port;  // "http://host:port"
    std::string path_prefix;       // "" or "/v1"
};

inline Url parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("URL lacks scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Url out;
    out.scheme_host_port = url.substr(0, path_start);
    if (path_start != std::string::npos) {
        out.path_prefix = url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    }
    return out;
}

class JsonClient {
public:
    explicit JsonClient(const std::string& base_url, std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : url_(parse_url(base_url)), timeout_(timeout) {}

    const Url& url() const { return url_; }

    nlohmann::json post(const std::string& path, const nlohmann::json& body,
                        const std::map<std::string, std::string>& headers = {}) const {
        auto client = make_client();
        httplib::Headers h(headers.begin(), headers.end());
        ++request_counter();
        auto res = client.Post(url_.path_prefix + path, h, body.dump(), "application/json");
        return unwrap(res, path);
    }

    nlohmann::json get(const std::string& path) const {
        auto client = make_client();
        ++request_counter();
        auto res = client.Get(url_.path_prefix + path);
        return unwrap(res, path);
    }

private:
    httplib::Client make_client() const {
        httplib::Client client(url_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        return client;
    }

    nlohmann::json unwrap(const httplib::Result& res, const std::string& path) const {
        const std::string where = url_.scheme_host_port + url_.path_prefix + path;
        if (!res) throw TransportError(where + ": " + httplib::to_string(res.error()));
        if (res->status != 200) {
            const bool transient = res->status == 429 || res->status >= 500;
            throw TransportError(where + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                                 res->status, transient);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransportError(where + ": malformed JSON response: " + e.what(), res->status, false);
        }
    }

    Url url_;
    std::chrono::milliseconds timeout_;
};

} // namespace affectsim::http
