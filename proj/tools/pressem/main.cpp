// pressem: command-line front end for fitting, compensation, rendering and
// the HTTP service. Exit codes: 0 ok, 2 usage, 3 data, 4 non-convergence.

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "pressem/artifacts.hpp"
#include "pressem/capture.hpp"
#include "pressem/config_io.hpp"
#include "pressem/errors.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/model_io.hpp"
#include "pressem/service.hpp"
#include "pressem/table_io.hpp"
#include "pressem/trace_io.hpp"

namespace fs = std::filesystem;
using namespace pressem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNotConverged = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input problems not covered by the core exception types.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_force = false;
bool g_verbose = false;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output files are checked before any work starts so a refusal costs nothing.
void check_writable(const std::string& path) {
  if (path.empty() || path == "-") return;
  if (!g_force && fs::exists(path)) throw UsageError(path + " exists (use --force to overwrite)");
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

std::string violations_text(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) out += v.field + ": " + v.rule + "\n";
  return out;
}

FDVVModel load_model(const std::string& path) {
  const auto model = parse_model(read_text(path));
  if (const auto v = validate_model(model); !v.empty()) {
    throw DataError(path + " is not a valid model:\n" + violations_text(v));
  }
  return model;
}

// A catalogue name ("default", "ideal") or a plant config file.
PlantConfig load_plant(const std::string& spec) {
  if (spec.empty()) return default_fixture_plant();
  for (const auto& p : plant_catalogue()) {
    if (p.name == spec) return p.config;
  }
  if (!fs::exists(spec)) throw DataError("plant '" + spec + "' is neither a catalogue name nor a file");
  const auto plant = parse_plant(read_text(spec));
  if (const auto v = validate_plant(plant); !v.empty()) throw DataError(spec + ":\n" + violations_text(v));
  return plant;
}

std::vector<StrokeSpec> parse_strokes(const std::vector<std::string>& specs) {
  std::vector<StrokeSpec> out;
  for (const auto& s : specs) out.push_back(parse_stroke_spec(s));
  return out;
}

std::vector<fs::path> collect_traces(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw DataError("no such trace file or directory: " + in);
    }
  }
  return files;
}

FDVVModel fixture_model(const std::string& name, std::uint64_t seed) {
  if (name == "tactile") return tactile_model();
  if (name == "tactile-captured") return captured_tactile_model(seed);
  if (name == "linear") return linear_model();
  if (name == "fd-baseline") return fd_baseline(tactile_model());
  throw UsageError("unknown fixture model '" + name + "'");
}

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;

  std::vector<std::string> traces;
  std::string name;

  std::string model;
  std::vector<std::string> trajectory;
  double noise = 0.0;
  double rate = 1000.0;

  std::string plant;
  std::string report;
  std::string report_csv;
  std::size_t threads = 0;

  std::string table;
  std::string log;
  std::string metrics;
  std::string script;

  std::string report_in;
  double epsilon = 0.0;

  std::string addr;
  std::string data_dir;
  std::size_t workers = 2;

  std::string fixture_model;
  std::string fixture_plant;
};

int cmd_fit(const Options& o) {
  check_writable(o.out);
  CaptureConfig config = o.config.empty() ? CaptureConfig{} : parse_capture_config(read_text(o.config));
  if (config.bins.empty()) config.bins = tactile_bins();
  if (!o.name.empty()) config.model_name = o.name;
  std::vector<PressTrace> traces;
  for (const auto& f : collect_traces(o.traces)) traces.push_back(read_trace_file(f));
  const auto model = fit_model(traces, config);
  write_output(o.out, serialize_model(model));
  return 0;
}

int cmd_synth(const Options& o) {
  check_writable(o.out);
  const auto model = load_model(o.model);
  const auto trajectory = service::build_trajectory(parse_strokes(o.trajectory), o.rate);
  if (!(o.noise >= 0.0)) throw DataError("--noise must be >= 0");
  write_output(o.out, write_trace_csv(synth_trace_from_model(model, trajectory, o.noise, o.seed)));
  return 0;
}

int cmd_compensate(const Options& o) {
  for (const auto& p : {o.out, o.report, o.report_csv}) check_writable(p);
  const auto model = load_model(o.model);
  auto plant = load_plant(o.plant);
  auto config = o.config.empty() ? CompensationConfig{} : parse_compensation_config(read_text(o.config));
  if (o.seed_given) {
    plant.rng_seed = o.seed;
    config.seed = o.seed;
  }
  if (o.threads > 0) config.threads = o.threads;
  ProgressCallback progress;
  if (g_verbose) {
    progress = [](const ProgressSnapshot& p) {
      std::cerr << to_string(p.direction) << " bin " << p.bin << " iteration " << p.iteration << ": mean "
                << format_number(p.mean_abs_error_cN) << " cN\n";
    };
  }
  const auto result = compensate(plant, model, config, progress);
  write_output(o.out, serialize_table(result.table));
  if (!o.report.empty()) write_output(o.report, serialize_report(result.report));
  if (!o.report_csv.empty()) write_output(o.report_csv, report_csv(result.report));
  if (!o.out.empty() && o.out != "-") std::cout << format_report_summary(result.report);
  if (!result.report.converged()) {
    std::cerr << "compensation did not converge\n";
    return kExitNotConverged;
  }
  return 0;
}

int cmd_render(const Options& o) {
  for (const auto& p : {o.out, o.log, o.metrics}) check_writable(p);
  const auto table = parse_table(read_text(o.table));
  if (const auto v = validate_table(table); !v.empty()) throw DataError(o.table + ":\n" + violations_text(v));
  const auto config = o.config.empty() ? RendererConfig{} : parse_renderer_config(read_text(o.config));

  if (!o.script.empty()) {
    // Reading script: displacement column only, no plant in the loop.
    std::vector<VibrationProfile> vibrations;
    if (!o.model.empty()) vibrations = load_model(o.model).vibrations;
    const auto script = read_trace_file(o.script);
    Renderer renderer(config, table, vibrations);
    const auto ticks = run_script(renderer, script.displacement_mm);
    write_output(o.log, format_session_log(ticks));
    return 0;
  }
  if (o.model.empty()) throw UsageError("render needs --model (the reference) unless --script is given");
  if (o.trajectory.empty()) throw UsageError("render needs at least one --trajectory");
  const auto model = load_model(o.model);
  auto plant = load_plant(o.plant);
  if (o.seed_given) plant.rng_seed = o.seed;
  const auto out = service::render_artifacts(model, table, plant, config, parse_strokes(o.trajectory));
  if (!o.out.empty()) write_output(o.out, out.trace_csv);
  if (!o.log.empty()) write_output(o.log, out.session_log);
  if (!o.metrics.empty()) {
    write_output(o.metrics, out.metrics_json);
  } else if (o.out.empty() && o.log.empty()) {
    std::cout << out.metrics_json;
  } else {
    std::cout << "mean_abs_error_cN=" << format_number(out.error.mean_abs_cN) << "\n";
  }
  return 0;
}

int cmd_report(const Options& o) {
  const auto text = read_text(o.report_in);
  const bool csv = fs::path(o.report_in).extension() == ".csv";
  const auto report = csv ? parse_report_csv(text, o.epsilon) : parse_report(text);
  std::cout << format_report_summary(report);
  return 0;
}

int cmd_validate(const Options& o) {
  const auto model = parse_model(read_text(o.model));
  if (const auto v = validate_model(model); !v.empty()) {
    std::cout << violations_text(v);
    return kExitData;
  }
  return 0;
}

int cmd_fixture(const Options& o) {
  if (o.fixture_model.empty() == o.fixture_plant.empty()) throw UsageError("fixture needs exactly one of --model, --plant");
  check_writable(o.out);
  if (!o.fixture_model.empty()) {
    write_output(o.out, serialize_model(fixture_model(o.fixture_model, o.seed_given ? o.seed : 7)));
    return 0;
  }
  for (const auto& p : plant_catalogue()) {
    if (p.name == o.fixture_plant) {
      write_output(o.out, serialize_plant(p.config));
      return 0;
    }
  }
  throw UsageError("unknown fixture plant '" + o.fixture_plant + "'");
}

int cmd_serve(const Options& o) {
  std::string addr = o.addr;
  if (addr.empty()) {
    const char* env = std::getenv("PRESSEM_ADDR");
    addr = env ? env : "127.0.0.1:8080";
  }
  std::string dir = o.data_dir;
  if (dir.empty()) {
    const char* env = std::getenv("PRESSEM_DATA_DIR");
    dir = env ? env : "pressem-data";
  }
  std::pair<std::string, int> hp;
  try {
    hp = service::parse_address(addr);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  // Signals are taken synchronously by this thread; every thread started
  // below inherits the blocked mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::Service svc({dir, o.workers});
  const int port = svc.start(hp.first, hp.second);
  std::cout << "listening on " << hp.first << ":" << port << " (data " << dir << ")" << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  svc.stop();
  return 0;
}

void add_common(CLI::App* cmd, Options& o, bool config, bool out, bool seed) {
  if (config) cmd->add_option("--config", o.config, "Configuration document (JSON)")->check(CLI::ExistingFile);
  if (out) cmd->add_option("--out", o.out, "Output path (stdout when omitted)");
  if (seed) {
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&o](std::uint64_t s) {
          o.seed = s;
          o.seed_given = true;
        },
        "Seed for every random draw");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pressem: button force-displacement-velocity-vibration workbench", "pressem"};
  app.require_subcommand(1);
  app.add_flag("--force", g_force, "Overwrite existing output files");
  app.add_flag("-v,--verbose", g_verbose, "Progress on stderr");
  app.set_version_flag("--version", "pressem 0.1.0");

  Options o;
  int (*run)(const Options&) = nullptr;

  auto* fit = app.add_subcommand("fit", "Fit a model from captured press traces");
  fit->add_option("traces", o.traces, "Trace CSV files or directories of them")->required();
  add_common(fit, o, true, true, false);
  fit->add_option("--name", o.name, "Model name (overrides the config)");
  fit->callback([&] { run = cmd_fit; });

  auto* synth = app.add_subcommand("synth", "Synthesize the trace an ideal button would produce");
  synth->add_option("--model", o.model, "Model document")->required()->check(CLI::ExistingFile);
  synth->add_option("--trajectory", o.trajectory, "Stroke travel:peak_velocity[:dwell_ms], repeatable")->required();
  synth->add_option("--noise", o.noise, "Force noise sigma in cN")->capture_default_str();
  synth->add_option("--rate", o.rate, "Sample rate in Hz")->capture_default_str();
  add_common(synth, o, false, true, true);
  synth->callback([&] { run = cmd_synth; });

  auto* comp = app.add_subcommand("compensate", "Tune an actuation table against a simulated plant");
  comp->add_option("--model", o.model, "Reference model document")->required()->check(CLI::ExistingFile);
  comp->add_option("--plant", o.plant, "Plant: catalogue name (default, ideal) or config file")
      ->default_str("default");
  comp->add_option("--report", o.report, "Convergence report output (JSON)");
  comp->add_option("--report-csv", o.report_csv, "Convergence report output (CSV)");
  comp->add_option("--threads", o.threads, "Worker threads (overrides the config)");
  add_common(comp, o, true, true, true);
  comp->callback([&] { run = cmd_compensate; });

  auto* render = app.add_subcommand("render", "Run a table through the renderer and plant");
  render->add_option("--table", o.table, "Actuation table document")->required()->check(CLI::ExistingFile);
  render->add_option("--model", o.model, "Reference model (scoring and vibrations)")->check(CLI::ExistingFile);
  render->add_option("--plant", o.plant, "Plant: catalogue name (default, ideal) or config file")
      ->default_str("default");
  render->add_option("--trajectory", o.trajectory, "Stroke travel:peak_velocity[:dwell_ms], repeatable");
  render->add_option("--script", o.script, "Reading script (trace CSV); skips the plant")->check(CLI::ExistingFile);
  render->add_option("--log", o.log, "Session log output (CSV)");
  render->add_option("--metrics", o.metrics, "Metrics output (JSON)");
  add_common(render, o, true, true, true);
  render->callback([&] { run = cmd_render; });

  auto* report = app.add_subcommand("report", "Summarize a convergence report");
  report->add_option("report", o.report_in, "Report file (.json or .csv)")->required()->check(CLI::ExistingFile);
  report->add_option("--epsilon", o.epsilon, "Threshold used to mark CSV bins converged");
  report->callback([&] { run = cmd_report; });

  auto* validate = app.add_subcommand("validate", "Check a model document; silent when valid");
  validate->add_option("model", o.model, "Model document")->required()->check(CLI::ExistingFile);
  validate->callback([&] { run = cmd_validate; });

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", o.addr, "host:port (env PRESSEM_ADDR, default 127.0.0.1:8080)");
  serve->add_option("--data-dir", o.data_dir, "Data directory (env PRESSEM_DATA_DIR, default pressem-data)");
  serve->add_option("--workers", o.workers, "Job worker threads")->capture_default_str();
  serve->callback([&] { run = cmd_serve; });

  auto* fixture = app.add_subcommand("fixture", "Write a built-in fixture model or plant");
  fixture->add_option("--model", o.fixture_model, "tactile, tactile-captured, linear or fd-baseline");
  fixture->add_option("--plant", o.fixture_plant, "default or ideal");
  add_common(fixture, o, false, true, true);
  fixture->callback([&] { run = cmd_fixture; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    return run(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
