#include "store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pressem::service {

namespace fs = std::filesystem;

const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued:
      return "queued";
    case JobStatus::running:
      return "running";
    case JobStatus::done:
      return "done";
    case JobStatus::failed:
      return "failed";
    case JobStatus::non_converged:
      return "non_converged";
  }
  return "failed";
}

JobStatus parse_job_status(const std::string& s) {
  for (auto st : {JobStatus::queued, JobStatus::running, JobStatus::done, JobStatus::failed, JobStatus::non_converged}) {
    if (s == to_string(st)) return st;
  }
  throw std::runtime_error("unknown job status '" + s + "'");
}

bool is_terminal(JobStatus s) { return s == JobStatus::done || s == JobStatus::failed || s == JobStatus::non_converged; }

json to_json(const JobRecord& job, bool with_request) {
  json j;
  j["id"] = job.id;
  j["kind"] = job.kind;
  j["status"] = to_string(job.status);
  if (!job.error.empty()) j["error"] = job.error;
  j["created"] = job.created;
  j["updated"] = job.updated;
  j["artifacts"] = job.artifacts;
  j["progress_count"] = job.progress.size();
  if (with_request) {
    j["request"] = job.request;
    j["progress"] = job.progress;
  }
  return j;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string make_id(char prefix, std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c-%06zu", prefix, n);
  return buf;
}

json meta_json(const ModelMeta& m) {
  return {{"id", m.id}, {"name", m.name},       {"parent", m.parent},
          {"created", m.created}, {"updated", m.updated}, {"deleted", m.deleted}};
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "models");
  fs::create_directories(root_ / "jobs");
  const auto text = read_file(root_ / "index.json");
  if (!text) {
    save_index();
    return;
  }
  const auto idx = json::parse(*text);
  next_model_ = idx.at("next_model").get<std::size_t>();
  next_job_ = idx.at("next_job").get<std::size_t>();
  for (const auto& m : idx.at("models")) {
    models_.push_back({m.at("id").get<std::string>(), m.at("name").get<std::string>(),
                       m.at("parent").get<std::string>(), m.at("created").get<std::string>(),
                       m.at("updated").get<std::string>(), m.at("deleted").get<bool>()});
  }
}

void Store::save_index() {
  json idx;
  idx["next_model"] = next_model_;
  idx["next_job"] = next_job_;
  idx["models"] = json::array();
  for (const auto& m : models_) idx["models"].push_back(meta_json(m));
  write_file_atomic(root_ / "index.json", idx.dump(2) + "\n");
}

std::string Store::add_model(const std::string& document, const std::string& name, const std::string& parent) {
  std::lock_guard lock(mutex_);
  const std::string id = make_id('m', next_model_++);
  write_file_atomic(root_ / "models" / (id + ".json"), document);
  const auto now = utc_now();
  models_.push_back({id, name, parent, now, now, false});
  save_index();
  return id;
}

std::optional<ModelMeta> Store::model(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& m : models_) {
    if (m.id == id) return m;
  }
  return std::nullopt;
}

std::optional<std::string> Store::model_document(const std::string& id) const {
  {
    std::lock_guard lock(mutex_);
    bool known = false;
    for (const auto& m : models_) known = known || (m.id == id && !m.deleted);
    if (!known) return std::nullopt;
  }
  return read_file(root_ / "models" / (id + ".json"));
}

void Store::replace_model(const std::string& id, const std::string& document, const std::string& name) {
  std::lock_guard lock(mutex_);
  for (auto& m : models_) {
    if (m.id != id) continue;
    write_file_atomic(root_ / "models" / (id + ".json"), document);
    m.name = name;
    m.updated = utc_now();
    save_index();
    return;
  }
  throw std::runtime_error("unknown model " + id);
}

void Store::delete_model(const std::string& id) {
  std::lock_guard lock(mutex_);
  for (auto& m : models_) {
    if (m.id != id) continue;
    m.deleted = true;
    m.updated = utc_now();
    save_index();
    std::error_code ec;
    fs::remove(root_ / "models" / (id + ".json"), ec);
    return;
  }
}

std::vector<ModelMeta> Store::models() const {
  std::lock_guard lock(mutex_);
  return models_;
}

std::string Store::next_job_id() {
  std::lock_guard lock(mutex_);
  const std::string id = make_id('j', next_job_++);
  save_index();
  return id;
}

void Store::save_job(const JobRecord& job) {
  write_file_atomic(root_ / "jobs" / job.id / "job.json", to_json(job, true).dump(2) + "\n");
}

std::vector<JobRecord> Store::load_jobs() const {
  std::vector<JobRecord> out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root_ / "jobs")) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const auto text = read_file(d / "job.json");
    if (!text) continue;
    const auto j = json::parse(*text);
    JobRecord r;
    r.id = j.at("id").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.status = parse_job_status(j.at("status").get<std::string>());
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    r.created = j.at("created").get<std::string>();
    r.updated = j.at("updated").get<std::string>();
    r.request = j.at("request");
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    for (const auto& p : j.at("progress")) r.progress.push_back(p);
    out.push_back(std::move(r));
  }
  return out;
}

void Store::write_artifact(const std::string& job_id, const std::string& name, const std::string& content) {
  write_file_atomic(root_ / "jobs" / job_id / name, content);
}

std::optional<std::string> Store::read_artifact(const std::string& job_id, const std::string& name) const {
  if (name.empty() || name == "job.json" || name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
    return std::nullopt;
  }
  return read_file(root_ / "jobs" / job_id / name);
}

}  // namespace pressem::service
