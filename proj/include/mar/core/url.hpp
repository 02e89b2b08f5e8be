#pragma once

#include <string>

namespace mar {

// "http://host:port/base" -> origin "http://host:port", path "/base" (no trailing slash).
struct HttpEndpoint {
    std::string origin;
    std::string path;

    static HttpEndpoint parse(const std::string& url);
    std::string at(const std::string& route) const { return path + route; }
};

}  // namespace mar
