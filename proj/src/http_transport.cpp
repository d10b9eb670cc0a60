#include <httplib.h>

#include <regex>

#include "hypadv/error.hpp"
#include "hypadv/gateway.hpp"

namespace hypadv::gateway {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorKind::kUsage, "malformed URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

class HttplibTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                    std::chrono::milliseconds timeout) override {
    const ParsedUrl parsed = parse_url(url);
    // httplib::Client is not safe for concurrent use; one per call.
    httplib::Client client(parsed.scheme_host_port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto res = client.Post(parsed.path, h, body, content_type);
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace hypadv::gateway
