#pragma once

#include <string>
#include <utility>

namespace cliniqa::detail {

/// Splits "http://host:port/path" into (base, path) for httplib clients.
/// Returns path "/" when the URL has no path component. The caller supplies
/// the error type via E.
template <typename E>
std::pair<std::string, std::string> split_http_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw E("invalid endpoint url: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

} // namespace cliniqa::detail
