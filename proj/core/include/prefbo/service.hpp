#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "prefbo/nsga2.hpp"

namespace prefbo {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path state_dir;  // empty disables persistence
  Nsga2Params nsga;                 // defaults for sessions that omit them
};

/// HTTP front end for interactive runs. Each session owns one run on a
/// worker thread; the run parks at the elicitation until a pick arrives
/// over the wire. Endpoints (JSON bodies): POST /sessions,
/// GET /sessions/{id}, GET /sessions/{id}/front,
/// POST /sessions/{id}/pick, GET /sessions/{id}/result.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Restores persisted sessions, binds the configured address and serves
  /// until stop() is called from another thread. Throws when the address
  /// cannot be bound.
  void run();

  /// Same restore-and-serve on an OS-assigned port, in a background
  /// thread. Returns once the server accepts connections.
  void start();

  /// Stops accepting requests, cancels parked runs and joins every
  /// worker. Unfinished sessions stay on disk when persistence is on.
  /// Idempotent.
  void stop();

  /// Bound port (differs from options.port after start()).
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prefbo
