#include "pressem/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "pressem/artifacts.hpp"
#include "pressem/config_io.hpp"
#include "pressem/errors.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/model_io.hpp"
#include "pressem/table_io.hpp"
#include "pressem/trace_io.hpp"
#include "store.hpp"

namespace pressem::service {

namespace {

constexpr const char* kJson = "application/json";
constexpr long kMaxWaitMs = 30000;

// Request problem mapped straight onto an HTTP status.
struct HttpError : std::runtime_error {
  HttpError(int status, const std::string& message, json detail = {})
      : std::runtime_error(message), status(status), detail(std::move(detail)) {}
  int status;
  json detail;
};

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& message, const json& detail = {}) {
  json body{{"error", message}};
  if (detail.is_object()) {
    for (const auto& [k, v] : detail.items()) body[k] = v;
  }
  reply(res, status, body);
}

json violations_json(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const auto& v : violations) out.push_back({{"field", v.field}, {"rule", v.rule}});
  return out;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError(400, "body is not JSON", {{"location", "byte " + std::to_string(e.byte)}});
  }
}

// Parses and validates a model document; 400 on failure.
FDVVModel checked_model(const std::string& text) {
  FDVVModel model;
  try {
    model = parse_model(text);
  } catch (const ParseError& e) {
    throw HttpError(400, e.message(), {{"location", e.location()}});
  }
  if (const auto v = validate_model(model); !v.empty()) {
    throw HttpError(400, "model violates invariants", {{"violations", violations_json(v)}});
  }
  return model;
}

double number_param(const json& body, const char* name) {
  if (!body.contains(name) || !body[name].is_number()) {
    throw HttpError(400, std::string("edit needs numeric '") + name + "'", {{"location", std::string("/") + name}});
  }
  return body[name].get<double>();
}

std::size_t index_param(const json& body, const char* name) {
  if (!body.contains(name) || !body[name].is_number_unsigned()) {
    throw HttpError(400, std::string("edit needs non-negative integer '") + name + "'",
                    {{"location", std::string("/") + name}});
  }
  return body[name].get<std::size_t>();
}

FDVVModel apply_edit(const FDVVModel& model, const json& body) {
  if (!body.is_object() || !body.contains("op") || !body["op"].is_string()) {
    throw HttpError(400, "edit needs a string 'op'", {{"location", "/op"}});
  }
  const auto op = body["op"].get<std::string>();
  try {
    if (op == "scale_force") return edit_scale_force(model, number_param(body, "factor"));
    if (op == "shift_curve") {
      if (!body.contains("direction") || !body["direction"].is_string()) {
        throw HttpError(400, "edit needs 'direction'", {{"location", "/direction"}});
      }
      return edit_shift_curve(model, parse_direction(body["direction"].get<std::string>()), index_param(body, "bin"),
                              number_param(body, "delta_cN"));
    }
    if (op == "set_travel") return edit_set_travel(model, number_param(body, "travel_mm"));
    if (op == "set_vibration_trigger") {
      return edit_set_vibration_trigger(model, index_param(body, "index"), number_param(body, "trigger_mm"));
    }
    if (op == "fd_baseline") return fd_baseline(model);
  } catch (const DomainError& e) {
    throw HttpError(400, e.what());
  } catch (const ParseError& e) {
    throw HttpError(400, e.message(), {{"location", e.location()}});
  }
  throw HttpError(400, "unknown edit op '" + op + "'", {{"location", "/op"}});
}

// Parses a config sub-document with one of the config_io parsers, mapping
// failures to 422 with the pointer prefixed by the request field.
template <typename T, typename Parse>
T job_config(const json& request, const char* field, Parse parse) {
  if (!request.contains(field)) return parse("{}");
  if (!request[field].is_object()) throw HttpError(422, std::string("'") + field + "' must be an object");
  try {
    return parse(request[field].dump());
  } catch (const ParseError& e) {
    throw HttpError(422, e.message(), {{"location", std::string("/") + field + e.location()}});
  }
}

json meta_to_json(const ModelMeta& m) {
  json j{{"id", m.id}, {"name", m.name}};
  j["parent"] = m.parent.empty() ? json(nullptr) : json(m.parent);
  j["created"] = m.created;
  j["updated"] = m.updated;
  return j;
}

long query_long(const httplib::Request& req, const char* name, long fallback) {
  if (!req.has_param(name)) return fallback;
  const auto text = req.get_param_value(name);
  long v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || v < 0) {
    throw HttpError(400, std::string("query parameter '") + name + "' must be a non-negative integer");
  }
  return v;
}

}  // namespace

std::pair<std::string, int> parse_address(std::string_view text, int default_port) {
  std::string host = "127.0.0.1";
  int port = default_port;
  const auto colon = text.rfind(':');
  std::string_view host_part = colon == std::string_view::npos ? text : text.substr(0, colon);
  if (!host_part.empty()) host = std::string(host_part);
  if (colon != std::string_view::npos) {
    const auto p = text.substr(colon + 1);
    const auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (p.empty() || ec != std::errc() || end != p.data() + p.size() || port < 0 || port > 65535) {
      throw std::invalid_argument("bad port in address '" + std::string(text) + "'");
    }
  }
  return {host, port};
}

struct Service::Impl {
  explicit Impl(ServiceOptions opts) : options(std::move(opts)), store(options.data_dir) {}

  ServiceOptions options;
  Store store;
  httplib::Server server;
  std::thread listener;

  // Job registry: the single serialized mutation point.
  std::mutex mutex;
  std::condition_variable queue_cv;
  std::condition_variable progress_cv;
  std::map<std::string, JobRecord> jobs;
  std::deque<std::string> queue;
  std::vector<std::thread> workers;
  bool stopping = false;
  bool finished = false;
  std::condition_variable done_cv;
  std::atomic<bool> stopped{false};

  void recover() {
    for (auto& job : store.load_jobs()) {
      if (job.status == JobStatus::running) {
        job.status = JobStatus::failed;
        job.error = "interrupted";
        job.updated = utc_now();
        store.save_job(job);
      }
      if (job.status == JobStatus::queued) queue.push_back(job.id);
      jobs.emplace(job.id, std::move(job));
    }
  }

  void start_workers() {
    const std::size_t n = std::max<std::size_t>(1, options.workers);
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back([this] { worker_loop(); });
  }

  void worker_loop() {
    for (;;) {
      std::string id;
      JobRecord snapshot;
      {
        std::unique_lock lock(mutex);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        auto& job = jobs.at(id);
        job.status = JobStatus::running;
        job.updated = utc_now();
        store.save_job(job);
        snapshot = job;
      }
      progress_cv.notify_all();
      JobStatus status = JobStatus::done;
      std::string error;
      std::vector<std::string> artifacts;
      try {
        status = execute(snapshot, artifacts);
      } catch (const std::exception& e) {
        status = JobStatus::failed;
        error = e.what();
      }
      {
        std::lock_guard lock(mutex);
        auto& job = jobs.at(id);
        job.status = status;
        job.error = error;
        job.artifacts = artifacts;
        job.updated = utc_now();
        store.save_job(job);
      }
      progress_cv.notify_all();
    }
  }

  void add_progress(const std::string& id, json snap) {
    {
      std::lock_guard lock(mutex);
      auto& job = jobs.at(id);
      snap["seq"] = job.progress.size();
      job.progress.push_back(std::move(snap));
      job.updated = utc_now();
      store.save_job(job);
    }
    progress_cv.notify_all();
  }

  void put_artifact(const JobRecord& job, std::vector<std::string>& names, const std::string& name,
                    const std::string& content) {
    store.write_artifact(job.id, name, content);
    names.push_back(name);
  }

  // Runs a normalized request. Everything it needs is inside the request.
  JobStatus execute(const JobRecord& job, std::vector<std::string>& artifacts) {
    const json& r = job.request;
    const FDVVModel model = parse_model(r.at("model_document").dump());
    if (job.kind == "compensate") {
      const auto plant = parse_plant(r.at("plant").dump());
      const auto config = parse_compensation_config(r.at("config").dump());
      const auto result = compensate(plant, model, config, [&](const ProgressSnapshot& p) {
        add_progress(job.id, {{"direction", to_string(p.direction)},
                              {"bin", p.bin},
                              {"iteration", p.iteration},
                              {"mean_abs_error_cN", p.mean_abs_error_cN},
                              {"max_error_cN", p.max_error_cN}});
      });
      put_artifact(job, artifacts, "table.json", serialize_table(result.table));
      put_artifact(job, artifacts, "report.json", serialize_report(result.report));
      put_artifact(job, artifacts, "report.csv", report_csv(result.report));
      return result.report.converged() ? JobStatus::done : JobStatus::non_converged;
    }
    std::vector<StrokeSpec> strokes;
    for (const auto& s : r.at("trajectory")) strokes.push_back(parse_stroke_spec(s.get<std::string>()));
    if (job.kind == "render") {
      const auto plant = parse_plant(r.at("plant").dump());
      const auto config = parse_renderer_config(r.at("renderer").dump());
      const auto table = parse_table(r.at("table").dump());
      const auto out = render_artifacts(model, table, plant, config, strokes);
      put_artifact(job, artifacts, "trace.csv", out.trace_csv);
      put_artifact(job, artifacts, "session.csv", out.session_log);
      put_artifact(job, artifacts, "metrics.json", out.metrics_json);
      return JobStatus::done;
    }
    const auto trajectory = build_trajectory(strokes, r.at("rate_hz").get<double>());
    const auto trace = synth_trace_from_model(model, trajectory, r.at("noise_cN").get<double>(),
                                              r.at("seed").get<std::uint64_t>());
    put_artifact(job, artifacts, "trace.csv", write_trace_csv(trace));
    return JobStatus::done;
  }

  FDVVModel stored_model(const std::string& id) {
    const auto doc = store.model_document(id);
    if (!doc) throw HttpError(404, "unknown model " + id);
    return parse_model(*doc);
  }

  PlantConfig resolve_plant(const json& request) {
    if (!request.contains("plant")) return default_fixture_plant();
    const auto& p = request["plant"];
    if (p.is_string()) {
      for (const auto& named : plant_catalogue()) {
        if (named.name == p.get<std::string>()) return named.config;
      }
      throw HttpError(422, "unknown plant '" + p.get<std::string>() + "'", {{"location", "/plant"}});
    }
    auto plant = job_config<PlantConfig>(request, "plant", [](const std::string& s) { return parse_plant(s); });
    if (const auto v = validate_plant(plant); !v.empty()) {
      throw HttpError(422, "plant invalid", {{"violations", violations_json(v)}});
    }
    return plant;
  }

  std::vector<StrokeSpec> resolve_trajectory(const json& request, json& normalized) {
    if (!request.contains("trajectory") || !request["trajectory"].is_array() || request["trajectory"].empty()) {
      throw HttpError(422, "'trajectory' must be a non-empty array of travel:peak_velocity[:dwell_ms] strings",
                      {{"location", "/trajectory"}});
    }
    std::vector<StrokeSpec> strokes;
    normalized["trajectory"] = json::array();
    for (std::size_t i = 0; i < request["trajectory"].size(); ++i) {
      const auto& s = request["trajectory"][i];
      if (!s.is_string()) throw HttpError(422, "stroke must be a string", {{"location", "/trajectory/" + std::to_string(i)}});
      try {
        strokes.push_back(parse_stroke_spec(s.get<std::string>()));
      } catch (const DomainError& e) {
        throw HttpError(422, e.what(), {{"location", "/trajectory/" + std::to_string(i)}});
      }
      normalized["trajectory"].push_back(s);
    }
    return strokes;
  }

  std::optional<std::uint64_t> request_seed(const json& request) {
    if (!request.contains("seed")) return std::nullopt;
    if (!request["seed"].is_number_unsigned()) throw HttpError(422, "'seed' must be a non-negative integer", {{"location", "/seed"}});
    return request["seed"].get<std::uint64_t>();
  }

  // Resolves references and snapshots every input into the job record.
  json normalize_job(const json& request) {
    if (!request.is_object()) throw HttpError(422, "job request must be an object");
    if (!request.contains("kind") || !request["kind"].is_string()) {
      throw HttpError(422, "job needs 'kind'", {{"location", "/kind"}});
    }
    const auto kind = request["kind"].get<std::string>();
    if (kind != "compensate" && kind != "render" && kind != "synth") {
      throw HttpError(422, "unknown job kind '" + kind + "'", {{"location", "/kind"}});
    }
    if (!request.contains("model") || !request["model"].is_string()) {
      throw HttpError(422, "job needs a 'model' id", {{"location", "/model"}});
    }
    const auto model_id = request["model"].get<std::string>();
    const FDVVModel model = stored_model(model_id);
    const auto seed = request_seed(request);

    json n;
    n["kind"] = kind;
    n["model"] = model_id;
    n["model_document"] = json::parse(serialize_model(model));
    if (seed) n["seed"] = *seed;

    if (kind == "compensate") {
      auto plant = resolve_plant(request);
      auto config = job_config<CompensationConfig>(request, "config",
                                                   [](const std::string& s) { return parse_compensation_config(s); });
      if (seed) {
        plant.rng_seed = *seed;
        config.seed = *seed;
      }
      if (const auto v = validate_compensation_config(config); !v.empty()) {
        throw HttpError(422, "compensation config invalid", {{"violations", violations_json(v)}});
      }
      n["plant"] = json::parse(serialize_plant(plant));
      n["config"] = json::parse(serialize_compensation_config(config));
      return n;
    }
    resolve_trajectory(request, n);
    if (kind == "render") {
      auto plant = resolve_plant(request);
      if (seed) plant.rng_seed = *seed;
      const auto config = job_config<RendererConfig>(request, "renderer",
                                                     [](const std::string& s) { return parse_renderer_config(s); });
      ActuationTable table;
      if (request.contains("table_job")) {
        if (!request["table_job"].is_string()) throw HttpError(422, "'table_job' must be a job id", {{"location", "/table_job"}});
        const auto tj = request["table_job"].get<std::string>();
        const auto text = table_artifact(tj);
        table = parse_table(text);
        n["table_job"] = tj;
      } else if (request.contains("table") && request["table"].is_object()) {
        try {
          table = parse_table(request["table"].dump());
        } catch (const ParseError& e) {
          throw HttpError(422, e.message(), {{"location", "/table" + e.location()}});
        }
      } else {
        throw HttpError(422, "render needs 'table_job' or an inline 'table'", {{"location", "/table"}});
      }
      if (const auto v = validate_table(table); !v.empty()) {
        throw HttpError(422, "table invalid", {{"violations", violations_json(v)}});
      }
      if (const auto v = validate_renderer_config(config, table); !v.empty()) {
        throw HttpError(422, "renderer config invalid", {{"violations", violations_json(v)}});
      }
      n["plant"] = json::parse(serialize_plant(plant));
      n["renderer"] = json::parse(serialize_renderer_config(config));
      n["table"] = json::parse(serialize_table(table));
      return n;
    }
    const double noise = request.value("noise_cN", 0.0);
    const double rate = request.value("rate_hz", 1000.0);
    if (!(noise >= 0.0)) throw HttpError(422, "'noise_cN' must be >= 0", {{"location", "/noise_cN"}});
    if (!(rate > 0.0)) throw HttpError(422, "'rate_hz' must be > 0", {{"location", "/rate_hz"}});
    n["noise_cN"] = noise;
    n["rate_hz"] = rate;
    n["seed"] = seed.value_or(0);
    return n;
  }

  std::string table_artifact(const std::string& job_id) {
    {
      std::lock_guard lock(mutex);
      const auto it = jobs.find(job_id);
      if (it == jobs.end()) throw HttpError(404, "unknown job " + job_id);
      if (it->second.kind != "compensate" || !is_terminal(it->second.status) ||
          it->second.status == JobStatus::failed) {
        throw HttpError(422, "job " + job_id + " has no finished table", {{"location", "/table_job"}});
      }
    }
    const auto text = store.read_artifact(job_id, "table.json");
    if (!text) throw HttpError(422, "job " + job_id + " has no table artifact", {{"location", "/table_job"}});
    return *text;
  }

  std::string submit(const json& request) {
    JobRecord job;
    job.request = normalize_job(request);
    job.kind = job.request["kind"].get<std::string>();
    job.id = store.next_job_id();
    job.created = job.updated = utc_now();
    {
      std::lock_guard lock(mutex);
      store.save_job(job);
      queue.push_back(job.id);
      jobs.emplace(job.id, job);
    }
    queue_cv.notify_one();
    return job.id;
  }

  void routes();
};

void Service::Impl::routes() {
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const HttpError& e) {
        reply_error(res, e.status, e.what(), e.detail);
      } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
      }
    };
  };

  server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}});
  }));

  server.Get("/models", guarded([this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& m : store.models()) {
      if (!m.deleted) out.push_back(meta_to_json(m));
    }
    reply(res, 200, out);
  }));

  server.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto model = checked_model(req.body);
    const auto id = store.add_model(serialize_model(model), model.name, "");
    reply(res, 201, {{"id", id}});
  }));

  server.Get(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto doc = store.model_document(id);
    if (!doc) throw HttpError(404, "unknown model " + id);
    const auto meta = store.model(id);
    res.set_header("X-Model-Parent", meta->parent);
    res.status = 200;
    res.set_content(*doc, kJson);
  }));

  server.Put(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto meta = store.model(id);
    if (!meta) throw HttpError(404, "unknown model " + id);
    if (meta->deleted) throw HttpError(409, "model " + id + " is deleted");
    const auto model = checked_model(req.body);
    store.replace_model(id, serialize_model(model), model.name);
    reply(res, 200, {{"id", id}});
  }));

  server.Delete(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto meta = store.model(id);
    if (!meta || meta->deleted) throw HttpError(404, "unknown model " + id);
    store.delete_model(id);
    res.status = 204;
  }));

  server.Post(R"(/models/([^/]+)/edits)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto meta = store.model(id);
    if (!meta) throw HttpError(404, "unknown model " + id);
    if (meta->deleted) throw HttpError(409, "model " + id + " is deleted");
    const auto parent = stored_model(id);
    const auto child = apply_edit(parent, parse_body(req));
    const auto child_id = store.add_model(serialize_model(child), meta->name, id);
    reply(res, 201, {{"id", child_id}, {"parent", id}});
  }));

  server.Get("/plants", guarded([](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& p : plant_catalogue()) {
      out.push_back({{"name", p.name}, {"config", json::parse(serialize_plant(p.config))}});
    }
    reply(res, 200, out);
  }));

  server.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = submit(parse_body(req));
    reply(res, 202, {{"id", id}});
  }));

  server.Get("/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    std::lock_guard lock(mutex);
    for (const auto& [id, job] : jobs) out.push_back(to_json(job, false));
    reply(res, 200, out);
  }));

  server.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    std::lock_guard lock(mutex);
    const auto it = jobs.find(id);
    if (it == jobs.end()) throw HttpError(404, "unknown job " + id);
    reply(res, 200, to_json(it->second, true));
  }));

  server.Get(R"(/jobs/([^/]+)/progress)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto since = static_cast<std::size_t>(query_long(req, "since", 0));
    const long wait_ms = std::min(query_long(req, "wait_ms", 0), kMaxWaitMs);
    std::unique_lock lock(mutex);
    auto it = jobs.find(id);
    if (it == jobs.end()) throw HttpError(404, "unknown job " + id);
    progress_cv.wait_for(lock, std::chrono::milliseconds(wait_ms), [&] {
      return stopping || it->second.progress.size() > since || is_terminal(it->second.status);
    });
    const auto& job = it->second;
    json snaps = json::array();
    for (std::size_t i = since; i < job.progress.size(); ++i) snaps.push_back(job.progress[i]);
    reply(res, 200, {{"id", id}, {"status", to_string(job.status)}, {"snapshots", snaps},
                     {"next", std::max(since, job.progress.size())}});
  }));

  server.Get(R"(/jobs/([^/]+)/artifacts/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    const auto name = req.matches[2].str();
    {
      std::lock_guard lock(mutex);
      const auto it = jobs.find(id);
      if (it == jobs.end()) throw HttpError(404, "unknown job " + id);
      const auto& names = it->second.artifacts;
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw HttpError(404, "job " + id + " has no artifact " + name);
      }
    }
    const auto text = store.read_artifact(id, name);
    if (!text) throw HttpError(404, "artifact " + name + " missing on disk");
    const bool is_json = name.size() > 5 && name.compare(name.size() - 5, 5, ".json") == 0;
    res.status = 200;
    res.set_content(*text, is_json ? kJson : "text/csv");
  }));
}

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->recover();
  impl_->routes();
  impl_->start_workers();
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->done_cv.wait(lock, [&] { return impl_->finished; });
}

void Service::stop() {
  if (!impl_ || impl_->stopped.exchange(true)) return;
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopping = true;
  }
  impl_->queue_cv.notify_all();
  impl_->progress_cv.notify_all();
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  for (auto& w : impl_->workers) w.join();
  impl_->workers.clear();
  {
    std::lock_guard lock(impl_->mutex);
    impl_->finished = true;
  }
  impl_->done_cv.notify_all();
}

}  // namespace pressem::service
