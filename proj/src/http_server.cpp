#include "visurvey/service.hpp"

#include "httplib.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace visurvey {

struct HttpServer::Impl {
  ApiService& service;
  std::optional<std::filesystem::path> assets_dir;
  httplib::Server server;

  Impl(ApiService& s, std::optional<std::filesystem::path> dir) : service(s), assets_dir(std::move(dir)) {}
};

namespace {

void forward(ApiService& service, const httplib::Request& req, httplib::Response& res) {
  ApiRequest request;
  request.method = req.method;
  request.path = req.path;
  for (const auto& [key, value] : req.params) request.query.emplace(key, value);
  request.body = req.body;
  request.authorization = req.get_header_value("Authorization");
  const ApiResponse response = service.handle(request);
  res.status = response.status;
  res.set_content(response.body, response.content_type);
}

const char* mime_for(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

HttpServer::HttpServer(ApiService& service, std::optional<std::filesystem::path> assets_dir, int threads)
    : impl_(std::make_unique<Impl>(service, std::move(assets_dir))) {
  httplib::Server& server = impl_->server;
  const std::size_t pool = static_cast<std::size_t>(std::max(1, threads));
  server.new_task_queue = [pool] { return new httplib::ThreadPool(pool); };

  ApiService& svc = impl_->service;
  auto handler = [&svc](const httplib::Request& req, httplib::Response& res) { forward(svc, req, res); };
  server.Get(R"(/v1/.*)", handler);
  server.Post(R"(/v1/.*)", handler);
  server.Put(R"(/v1/.*)", handler);
  server.Delete(R"(/v1/.*)", handler);

  Impl* impl = impl_.get();
  server.Get(R"(/assets/([^/]+))", [impl](const httplib::Request& req, httplib::Response& res) {
    const std::string key = req.matches[1];
    if (impl->assets_dir) {
      std::error_code ec;
      for (const auto& entry : std::filesystem::directory_iterator(*impl->assets_dir, ec)) {
        if (!entry.is_regular_file() || entry.path().stem().string() != key) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream data;
        data << in.rdbuf();
        res.set_content(data.str(), mime_for(entry.path()));
        return;
      }
    }
    res.status = 404;
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    body["httpStatus"] = 404;
    body["code"] = "UNKNOWN_ASSET";
    body["message"] = "asset '" + key + "' not found";
    body["path"] = req.path;
    res.set_content(body.dump(), "application/json");
  });

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    body["httpStatus"] = res.status;
    body["code"] = res.status == 404 ? "NOT_FOUND" : "HTTP_ERROR";
    body["message"] = "no route for " + req.method + " " + req.path;
    body["path"] = req.path;
    res.set_content(body.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace visurvey
