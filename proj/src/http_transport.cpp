#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "faultlens/error.hpp"
#include "faultlens/http.hpp"

namespace faultlens {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "URL without scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const HttpRequest& request) override {
    const SplitUrl target = split_url(request.url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [name, value] : request.headers) {
      if (name == "Content-Type") {
        content_type = value;
      } else {
        headers.emplace(name, value);
      }
    }
    auto result = client.Post(target.path, headers, request.body, content_type);
    if (!result) {
      throw Error(ErrorKind::kNetworkError,
                  request.url + ": " + httplib::to_string(result.error()));
    }
    HttpResponse response;
    response.status = result->status;
    response.body = result->body;
    for (const auto& [name, value] : result->headers) response.headers[name] = value;
    return response;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace faultlens
