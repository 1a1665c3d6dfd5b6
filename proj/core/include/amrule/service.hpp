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

#ifndef AMRULE_SERVICE_HPP_
#define AMRULE_SERVICE_HPP_

#include <memory>
#include <string>
#include <thread>

#include "amrule/error.hpp"
#include "amrule/pipeline.hpp"

namespace httplib {
class Server;
}

namespace amrule::service {

// Parses "host:port"; a bare port binds 127.0.0.1. Port 0 picks a free one.
struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
  static BindAddress Parse(const std::string& text);
};

// HTTP status used for a library error.
int HttpStatusFor(ErrorCode code);

// JSON annotation API over a run. Reads are concurrent; writes go through
// the run's SessionManager.
class AnnotationService {
 public:
  explicit AnnotationService(pipeline::Run& run);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Binds and starts serving on a background thread. Throws kConfig when
  // the address cannot be bound.
  void Start(const BindAddress& address);
  void Stop();
  int port() const { return port_; }

 private:
  void Routes();

  pipeline::Run& run_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace amrule::service

#endif  // AMRULE_SERVICE_HPP_
