#pragma once

// Internal: splitting "http://host:port/prefix" into what cpp-httplib wants.

#include <string>
#include <string_view>

#include <httplib.h>

#include "fairkg/error.hpp"

namespace fairkg::detail {

struct HttpTarget {
    std::string origin;    // scheme://host[:port]
    std::string base_path; // "" or "/prefix" without trailing slash
};

inline HttpTarget parse_http_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw Error(ErrorCode::InvalidArgument, "URL needs a scheme: " + std::string(url));
    auto path_start = url.find('/', scheme_end + 3);
    HttpTarget t;
    t.origin = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) {
        t.base_path = std::string(url.substr(path_start));
        while (!t.base_path.empty() && t.base_path.back() == '/') t.base_path.pop_back();
    }
    return t;
}

inline httplib::Client make_client(const HttpTarget& target, int timeout_seconds = 10) {
    httplib::Client cli(target.origin);
    cli.set_connection_timeout(timeout_seconds, 0);
    cli.set_read_timeout(timeout_seconds, 0);
    cli.set_write_timeout(timeout_seconds, 0);
    return cli;
}

} // namespace fairkg::detail
