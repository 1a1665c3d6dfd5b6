/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "amrule/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "amrule/error.hpp"

namespace amrule::service {

BindAddress BindAddress::Parse(const std::string& text) {
  BindAddress a;
  const auto colon = text.rfind(':');
  std::string port_text = text;
  if (colon != std::string::npos) {
    a.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
    if (a.host.empty()) a.host = "127.0.0.1";
  }
  try {
    std::size_t used = 0;
    a.port = std::stoi(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument(port_text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "invalid bind address '" + text + "'");
  }
  if (a.port < 0 || a.port > 65535) {
    throw Error(ErrorCode::kConfig, "port out of range in '" + text + "'");
  }
  return a;
}

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
      return 422;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kIncompleteSession:
      return 409;
    default:
      return 500;
  }
}

namespace {

void Reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, int status, std::string_view code,
                const std::string& message) {
  Reply(res, status, {{"error", code}, {"message", message}});
}

// Runs a handler, mapping failures onto status codes.
template <typename F>
void Guard(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    ReplyError(res, HttpStatusFor(e.code()), ErrorCodeName(e.code()), e.what());
  } catch (const Json::exception& e) {
    ReplyError(res, 400, "bad_request", e.what());
  } catch (const std::exception& e) {
    ReplyError(res, 500, "internal", e.what());
  }
}

Json SessionSummary(const annotation::AnnotationSession& s) {
  Json j = s.ToJson();
  j.erase("candidates");
  return j;
}

}  // namespace

AnnotationService::AnnotationService(pipeline::Run& run)
    : run_(run), server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which would let two services
  // share a port silently.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  Routes();
}

AnnotationService::~AnnotationService() { Stop(); }

void AnnotationService::Routes() {
  auto& sessions = run_.sessions();
  server_->Get("/api/run/status", [this](const httplib::Request&, httplib::Response& res) {
    Guard(res, [&] { Reply(res, 200, run_.status().ToJson()); });
  });
  server_->Get("/api/metrics", [this](const httplib::Request&, httplib::Response& res) {
    Guard(res, [&] { Reply(res, 200, run_.metrics()); });
  });
  server_->Get("/api/sessions/current",
               [&sessions](const httplib::Request&, httplib::Response& res) {
                 Guard(res, [&] {
                   if (!sessions.has_session()) {
                     throw Error(ErrorCode::kNotFound, "no annotation session");
                   }
                   Reply(res, 200, sessions.Current().ToJson());
                 });
               });
  server_->Get("/api/sessions/current/candidates",
               [&sessions](const httplib::Request&, httplib::Response& res) {
                 Guard(res, [&] {
                   if (!sessions.has_session()) {
                     throw Error(ErrorCode::kNotFound, "no annotation session");
                   }
                   const auto session = sessions.Current();
                   Json arr = Json::array();
                   for (const auto& c : session.candidates()) {
                     arr.push_back(c.ToJson());
                   }
                   Reply(res, 200, arr);
                 });
               });
  server_->Post("/api/sessions/current/decisions",
                [&sessions](const httplib::Request& req, httplib::Response& res) {
                  Guard(res, [&] {
                    if (!sessions.has_session()) {
                      throw Error(ErrorCode::kNotFound, "no annotation session");
                    }
                    const Json body = Json::parse(req.body);
                    const auto decision = annotation::Decision::FromJson(body);
                    const auto session = sessions.Submit(decision);
                    Json delta = SessionSummary(session);
                    delta["decision"] = session.decisions().at(decision.rule_id).ToJson();
                    Reply(res, 200, delta);
                  });
                });
  server_->Post("/api/sessions/current/finalize",
                [&sessions](const httplib::Request&, httplib::Response& res) {
                  Guard(res, [&] {
                    if (!sessions.has_session()) {
                      throw Error(ErrorCode::kNotFound, "no annotation session");
                    }
                    sessions.Finalize();
                    Reply(res, 200, SessionSummary(sessions.Current()));
                  });
                });
}

void AnnotationService::Start(const BindAddress& address) {
  if (thread_.joinable()) {
    throw Error(ErrorCode::kConflict, "service already running");
  }
  if (address.port == 0) {
    port_ = server_->bind_to_any_port(address.host);
    if (port_ < 0) {
      throw Error(ErrorCode::kConfig, "cannot bind " + address.host);
    }
  } else {
    if (!server_->bind_to_port(address.host, address.port)) {
      throw Error(ErrorCode::kConfig, "cannot bind " + address.host + ":" +
                                          std::to_string(address.port) +
                                          " (port in use?)");
    }
    port_ = address.port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("annotation API listening on {}:{}", address.host, port_);
}

void AnnotationService::Stop() {
  if (!thread_.joinable()) return;
  server_->stop();
  thread_.join();
}

}  // namespace amrule::service
