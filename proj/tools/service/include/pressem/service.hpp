#pragma once

// HTTP API over model storage, simulation runs and compensation jobs.
// Routes and documents are listed in docs/openapi.yaml.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

namespace pressem::service {

struct ServiceOptions {
  std::filesystem::path data_dir = "pressem-data";
  std::size_t workers = 2;
};

// "host:port", ":port" or "host". Throws std::invalid_argument.
std::pair<std::string, int> parse_address(std::string_view text, int default_port = 8080);

class Service {
 public:
  // Opens (or creates) the data directory and resumes queued jobs.
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; the
  // bound port is returned. Throws std::runtime_error if binding fails.
  int start(const std::string& host, int port);

  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  // Stops accepting requests, lets running jobs finish and joins workers.
  // Queued jobs stay queued on disk.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pressem::service
