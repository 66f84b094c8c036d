#pragma once

// File-backed persistence under the data directory:
//   index.json              counters and model metadata
//   models/<id>.json         model documents
//   jobs/<id>/job.json       job record (request, status, progress)
//   jobs/<id>/<artifact>     job outputs
// Every write goes to a temporary file first and is renamed into place.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pressem::service {

using json = nlohmann::ordered_json;

struct ModelMeta {
  std::string id;
  std::string name;
  std::string parent;  // empty for roots
  std::string created;
  std::string updated;
  bool deleted = false;
};

enum class JobStatus { queued, running, done, failed, non_converged };

const char* to_string(JobStatus s);
JobStatus parse_job_status(const std::string& s);
bool is_terminal(JobStatus s);

struct JobRecord {
  std::string id;
  std::string kind;
  JobStatus status = JobStatus::queued;
  std::string error;
  std::string created;
  std::string updated;
  json request;
  std::vector<std::string> artifacts;
  std::vector<json> progress;
};

json to_json(const JobRecord& job, bool with_request);

std::string utc_now();

class Store {
 public:
  explicit Store(std::filesystem::path root);

  std::string add_model(const std::string& document, const std::string& name, const std::string& parent);
  std::optional<ModelMeta> model(const std::string& id) const;
  std::optional<std::string> model_document(const std::string& id) const;
  void replace_model(const std::string& id, const std::string& document, const std::string& name);
  void delete_model(const std::string& id);
  std::vector<ModelMeta> models() const;

  std::string next_job_id();
  void save_job(const JobRecord& job);
  std::vector<JobRecord> load_jobs() const;
  void write_artifact(const std::string& job_id, const std::string& name, const std::string& content);
  std::optional<std::string> read_artifact(const std::string& job_id, const std::string& name) const;

 private:
  void save_index();  // caller holds mutex_

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::size_t next_model_ = 1;
  std::size_t next_job_ = 1;
  std::vector<ModelMeta> models_;
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::optional<std::string> read_file(const std::filesystem::path& path);

}  // namespace pressem::service
