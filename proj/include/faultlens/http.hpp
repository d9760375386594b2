#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace faultlens {

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::map<std::string, std::string> headers;
  std::string body;
};

/// Blocking POST. Implementations throw Error(kNetworkError) when no HTTP
/// response was obtained; HTTP error statuses are returned, not thrown.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport. Supports http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

}  // namespace faultlens
