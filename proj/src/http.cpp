#include "rvc/http.hpp"

#include <httplib.h>

namespace rvc {

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams query;
    for (const auto& [k, v] : req.params) query[k] = v;
    const HttpReply reply = impl_->service.handle(req.method, req.path, query, req.body);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  const std::string any = "/.*";
  impl_->server.Get(any, route);
  impl_->server.Post(any, route);
  impl_->server.Put(any, route);
  impl_->server.Delete(any, route);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace rvc
