#include "mar/core/url.hpp"

#include "mar/core/error.hpp"

namespace mar {

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("URL without scheme: '" + url + "'");
    auto path_begin = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    if (path_begin == std::string::npos) {
        ep.origin = url;
    } else {
        ep.origin = url.substr(0, path_begin);
        ep.path = url.substr(path_begin);
        while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
    }
    return ep;
}

}  // namespace mar
