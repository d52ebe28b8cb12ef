#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"
#include "iadet/reporting.hpp"
#include "iadet/service.hpp"
#include "iadet/simulator.hpp"
#include "iadet/store.hpp"
#include "iadet/worker.hpp"

namespace iadet::cli {
namespace {

constexpr int kExitFailure = 2;

struct SimulateArgs {
  std::string store;
  std::size_t synthetic = 0;
  std::size_t holdout = 0;
  std::uint64_t dataset_seed = 0;
  double rate = 1.0;
  std::uint64_t seed = 0;
  double training_speed = TrainerCadence{}.training_speed;
  std::uint64_t batch_size = TrainerCadence{}.batch_size;
  double min_epoch = TrainerCadence{}.min_interval;
  std::string cadence = "epoch";
  std::string detector = "learning-curve";
  std::string strategy = "random";
  std::string clock = "virtual";
  std::string worker_url;
  bool navigation_exclusive = false;
  SyntheticDetectorConfig detector_config;
  std::string name;
  std::string out_json;
  std::string out_csv;
  std::string out_events;
  std::string out_ap;
};

struct ImportArgs {
  std::string store;
  std::string images;
  std::string annotations;
  std::string class_name;
};

struct ReportArgs {
  std::vector<std::string> files;
  std::string format = "markdown";
  std::string ab;
  std::string curve_out;
  std::size_t window = kDefaultBoxFilterWindow;
  std::size_t grid = 200;
};

struct ServeArgs {
  std::string store;
  std::string images;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string strategy = "random";
  std::uint64_t seed = 0;
  std::string worker_url;
  double training_speed = TrainerCadence{}.training_speed;
  std::uint64_t batch_size = TrainerCadence{}.batch_size;
};

struct WorkerArgs {
  std::string store;
  std::string core_url;
  std::string mode = "learning-curve";
  std::string host = "127.0.0.1";
  int port = 8090;
  double train_interval = 1.0;
  std::uint64_t seed = 0;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Blocks until SIGINT or SIGTERM. The signals must already be blocked.
void wait_for_shutdown(const sigset_t& signals) {
  int received = 0;
  sigwait(&signals, &received);
}

sigset_t block_shutdown_signals() {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  return signals;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.store.empty() == (a.synthetic == 0)) {
    err << "simulate: give exactly one of --store or --synthetic\n";
    return kExitFailure;
  }
  SimulationConfig config;
  config.rate = a.rate;
  config.seed = a.seed;
  config.cadence.training_speed = a.training_speed;
  config.cadence.batch_size = a.batch_size;
  config.cadence.min_interval = a.min_epoch;
  config.cadence.mode = parse_cadence(a.cadence);
  config.detector = parse_detector_kind(a.detector);
  config.detector_config = a.detector_config;
  config.detector_config.seed = a.seed;
  config.strategy = parse_strategy(a.strategy);
  config.clock = a.clock == "real" ? ClockMode::kReal : ClockMode::kVirtual;
  config.worker_url = a.worker_url;
  config.cost.include_navigation_in_unassisted = !a.navigation_exclusive;

  std::vector<ImageRecord> dataset;
  std::vector<ImageRecord> holdout;
  std::string name = a.name;
  if (!a.store.empty()) {
    auto store = AnnotationStore::open(a.store);
    dataset = store->records();
    if (name.empty()) name = std::filesystem::path(a.store).filename().string();
  } else {
    SyntheticDatasetConfig synth;
    synth.images = a.synthetic + a.holdout;
    synth.seed = a.dataset_seed;
    dataset = make_synthetic_dataset(synth);
    holdout.assign(dataset.begin() + static_cast<std::ptrdiff_t>(a.synthetic), dataset.end());
    dataset.resize(a.synthetic, dataset.front());
    if (name.empty()) name = fmt::format("synthetic-{}", a.synthetic);
  }

  SimulationResult result;
  try {
    result = simulate_run(dataset, config, name);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMissingGroundTruth) throw;
    err << "error: " << e.what() << "\n"
        << "hint: attach ground truth with `iadet import-voc --store <dir> --annotations <dir> "
           "--class <name>` before simulating\n";
    return kExitFailure;
  }
  const RunReport& report = result.report;

  if (!a.out_json.empty()) write_file(a.out_json, report_to_json(report));
  if (!a.out_csv.empty()) write_file(a.out_csv, report_timeline_csv(report));
  if (!a.out_events.empty()) {
    EventLog log;
    for (const Event& e : result.events) log.append(e);
    write_file(a.out_events, log.to_jsonl());
  }
  if (!a.out_ap.empty()) {
    if (holdout.empty()) {
      err << "simulate: --ap-out needs --holdout with --synthetic\n";
      return kExitFailure;
    }
    auto detector = make_detector(config);
    std::vector<double> checkpoints;
    constexpr int kCheckpoints = 10;
    for (int i = 1; i <= kCheckpoints; ++i) checkpoints.push_back(report.t_assisted * i / kCheckpoints);
    std::string csv = "t,ap\n";
    for (const auto& [t, ap] : ap_over_time(report, holdout, checkpoints, *detector)) {
      csv += fmt::format("{},{}\n", t, ap);
    }
    for (const auto& [label, ap] : final_ap_by_label(report, holdout, *detector)) {
      csv += fmt::format("# final {} {}\n", to_string(label), ap);
    }
    write_file(a.out_ap, csv);
  }

  out << fmt::format("{}: {} images, t_A={} s, t_N={} s, t_A/t_N={}, improvement={} %\n",
                     report.name, report.rows.size(), format_seconds(report.t_assisted),
                     format_seconds(report.t_unassisted), format_ratio(report.ratio),
                     format_percent(report.improvement_percent));
  return 0;
}

int cmd_import(const ImportArgs& a, std::ostream& out, std::ostream& err) {
  std::unique_ptr<AnnotationStore> store;
  if (AnnotationStore::exists(a.store)) {
    store = AnnotationStore::open(a.store);
  } else {
    std::vector<ImageRecord> records;
    if (!a.images.empty()) records = scan_dataset(a.images);
    store = AnnotationStore::create(a.store, std::move(records));
  }
  try {
    const VocImportSummary summary = store->import_voc_ground_truth(a.annotations, a.class_name);
    for (const std::string& e : summary.errors) err << "warning: " << e << "\n";
    if (summary.files == 0) err << "warning: no annotation files found in " << a.annotations << "\n";
    out << fmt::format("class {}: {} images, {} boxes ({} files read, {} parse errors)\n",
                       a.class_name, summary.images, summary.boxes, summary.files,
                       summary.errors.size());
    std::uint64_t unassisted = 0;
    for (const ImageRecord& r : store->records()) {
      if (r.gt_boxes) unassisted += unassisted_interactions(r.gt_boxes->size(), CostModelConfig{});
    }
    out << fmt::format("unassisted interactions: {} (navigation included)\n", unassisted);
    return 0;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnknownClass) throw;
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::vector<std::pair<std::string, AbRow>> read_ab_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::pair<std::string, AbRow>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("name", 0) == 0) continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw Error(ErrorCode::kParse, path + ": expected name,A,N,B rows");
    try {
      rows.emplace_back(cells[0],
                        ab_row(cells[0], std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, path + ": non-numeric AP in row '" + line + "'");
    }
  }
  return rows;
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  if (a.files.empty() && a.ab.empty()) {
    err << "report: no run reports given\n";
    return kExitFailure;
  }
  if (a.format != "markdown" && a.format != "csv") {
    err << "report: --format must be markdown or csv\n";
    return kExitFailure;
  }
  const bool markdown = a.format == "markdown";
  bool failed = false;
  std::vector<std::pair<std::string, RunReport>> loaded;
  for (const std::string& file : a.files) {
    try {
      loaded.emplace_back(file, report_from_json(read_file(file)));
    } catch (const Error& e) {
      err << file << ": " << e.what() << "\n";
      failed = true;
    }
  }
  std::sort(loaded.begin(), loaded.end(), [](const auto& x, const auto& y) {
    return std::tie(x.second.name, x.first) < std::tie(y.second.name, y.first);
  });
  if (!loaded.empty()) {
    std::vector<RunReport> reports;
    for (auto& [file, r] : loaded) reports.push_back(std::move(r));
    const SummaryTable table = summarize(reports);
    out << (markdown ? summary_markdown(table) : summary_csv(table));

    if (!a.curve_out.empty()) {
      double end = 0.0;
      for (const RunReport& r : reports) {
        const auto n = unassisted_schedule(r);
        end = std::max({end, r.timeline.empty() ? 0.0 : r.timeline.back().t,
                        n.empty() ? 0.0 : n.back()});
      }
      std::vector<double> grid;
      for (std::size_t j = 0; j <= a.grid; ++j) {
        grid.push_back(j == a.grid ? end : end * static_cast<double>(j) / a.grid);
      }
      std::vector<std::vector<double>> curves;
      for (const RunReport& r : reports) {
        const auto assisted = assisted_schedule(r);
        const auto unassisted = unassisted_schedule(r);
        std::vector<double> c;
        for (double t : grid) c.push_back(advantage_at(assisted, unassisted, t));
        curves.push_back(std::move(c));
      }
      const auto mean = box_filter_mean(curves, a.window);
      write_file(a.curve_out,
                 fmt::format("# box filter window: {}\n", a.window) + curve_csv(grid, mean));
    }
  }
  if (!a.ab.empty()) {
    try {
      auto named = read_ab_csv(a.ab);
      std::sort(named.begin(), named.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      std::vector<AbRow> rows;
      for (auto& [n, row] : named) rows.push_back(std::move(row));
      if (!rows.empty()) {
        if (!loaded.empty()) out << "\n";
        const AbTable table = ab_table(rows);
        out << (markdown ? ab_markdown(table) : ab_csv(table));
      }
    } catch (const Error& e) {
      err << a.ab << ": " << e.what() << "\n";
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream&) {
  auto store = AnnotationStore::open(a.store);
  const std::string images = a.images.empty() ? a.store : a.images;
  SteadyClock clock;
  ModelRegistry registry;
  std::unique_ptr<Detector> detector;
  std::unique_ptr<Trainer> trainer;
  if (!a.worker_url.empty()) {
    auto worker = std::make_shared<WorkerClient>(WorkerEndpoint{a.worker_url});
    detector = std::make_unique<ExternalDetector>(worker);
    trainer = std::make_unique<ExternalTrainer>(worker);
  } else if (store->has_ground_truth()) {
    SyntheticDetectorConfig synth;
    synth.seed = a.seed;
    detector = std::make_unique<SyntheticDetector>(synth);
    trainer = std::make_unique<BuiltInTrainer>();
  }
  AnnotationService service(*store, images, detector.get(), registry, parse_strategy(a.strategy),
                            a.seed, clock);
  std::optional<BackgroundTrainer> background;
  if (trainer) {
    TrainerCadence cadence;
    cadence.training_speed = a.training_speed;
    cadence.batch_size = a.batch_size;
    background.emplace(*store, *trainer, registry, cadence, clock);
    service.on_commit([&background] { background->notify(); });
  }
  const sigset_t signals = block_shutdown_signals();
  HttpServer server([&service](std::string_view m, std::string_view p, std::string_view b) {
    return service.handle(m, p, b);
  });
  const int port = server.bind(a.host, a.port);
  server.start();
  out << fmt::format("serving {} images on http://{}:{}\n", store->size(), a.host, port)
      << std::flush;
  wait_for_shutdown(signals);
  server.stop();
  if (background) background->stop();
  return 0;
}

int cmd_worker(const WorkerArgs& a, std::ostream& out, std::ostream& err) {
  auto store = AnnotationStore::open(a.store);
  SyntheticWorkerConfig config;
  config.mode = a.mode == "echo" ? WorkerMode::kEcho : WorkerMode::kLearningCurve;
  config.detector.seed = a.seed;
  config.core_url = a.core_url;
  SyntheticWorker worker(store->records(), config);
  const sigset_t signals = block_shutdown_signals();
  HttpServer server([&worker](std::string_view m, std::string_view p, std::string_view b) {
    return worker.handle(m, p, b);
  });
  const int port = server.bind(a.host, a.port);
  server.start();
  out << fmt::format("worker listening on http://{}:{}\n", a.host, port) << std::flush;

  std::jthread trainer;
  if (!a.core_url.empty()) {
    trainer = std::jthread([&worker, &err, interval = a.train_interval](std::stop_token stop) {
      SteadyClock clock;
      double next = interval;
      while (!stop.stop_requested()) {
        clock.sleep_until(next, stop);
        next += interval;
        if (stop.stop_requested()) break;
        try {
          worker.train_once();
        } catch (const Error& e) {
          err << "worker: " << e.what() << "\n";
        }
      }
    });
  }
  wait_for_shutdown(signals);
  trainer = {};
  server.stop();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-assisted bounding-box annotation: service, worker and simulator", "iadet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "iadet 0.1.0");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the robot annotator and write a report");
  simulate->add_option("--store", sim.store, "Store directory with imported ground truth")
      ->envname("IADET_STORE");
  simulate->add_option("--synthetic", sim.synthetic, "Generate this many synthetic images instead")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--holdout", sim.holdout, "Extra synthetic images kept for evaluation");
  simulate->add_option("--dataset-seed", sim.dataset_seed, "Seed of the synthetic dataset");
  simulate->add_option("--rate", sim.rate, "Robot interactions per second")
      ->check(CLI::PositiveNumber)
      ->envname("IADET_RATE");
  simulate->add_option("--seed", sim.seed, "Seed for selection and detector noise")
      ->envname("IADET_SEED");
  simulate->add_option("--v", sim.training_speed, "Training speed, images per second")
      ->check(CLI::PositiveNumber)
      ->envname("IADET_TRAINING_SPEED");
  simulate->add_option("--b", sim.batch_size, "Training batch size")
      ->check(CLI::PositiveNumber)
      ->envname("IADET_BATCH_SIZE");
  simulate->add_option("--min-epoch", sim.min_epoch, "Shortest epoch in seconds")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--cadence", sim.cadence, "epoch or per-commit")
      ->check(CLI::IsMember({"epoch", "per-commit"}))
      ->envname("IADET_CADENCE");
  simulate->add_option("--detector", sim.detector, "Detector driving the assistance")
      ->check(CLI::IsMember({"learning-curve", "perfect", "spurious", "silent", "external"}))
      ->envname("IADET_DETECTOR");
  simulate->add_option("--strategy", sim.strategy, "random or sequential")
      ->check(CLI::IsMember({"random", "sequential"}));
  simulate->add_option("--clock", sim.clock, "virtual or real")
      ->check(CLI::IsMember({"virtual", "real"}))
      ->envname("IADET_CLOCK");
  simulate->add_option("--worker-url", sim.worker_url, "Trainer worker for --detector external")
      ->envname("IADET_WORKER_URL");
  simulate->add_flag("--navigation-exclusive", sim.navigation_exclusive,
                     "Unassisted cost without the per-image navigation keypress");
  simulate->add_option("--p-max", sim.detector_config.p_max, "Saturated recall")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--tau", sim.detector_config.tau, "Learning-curve scale in labeled images")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--jitter", sim.detector_config.jitter_sigma, "Corner noise, fraction of side")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--fp-rate", sim.detector_config.fp_rate, "Initial spurious boxes per image")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--name", sim.name, "Report name");
  simulate->add_option("--out-json", sim.out_json, "Report JSON path");
  simulate->add_option("--out-csv", sim.out_csv, "Timeline CSV path");
  simulate->add_option("--out-events", sim.out_events, "Event log (JSON lines) path");
  simulate->add_option("--ap-out", sim.out_ap, "AP-over-time CSV on the holdout images");

  ImportArgs imp;
  auto* import_voc = app.add_subcommand("import-voc", "Attach PASCAL VOC ground truth for one class");
  import_voc->add_option("--store", imp.store, "Store directory")->required()->envname("IADET_STORE");
  import_voc->add_option("--images", imp.images, "Image directory used when creating the store")
      ->envname("IADET_IMAGES");
  import_voc->add_option("--annotations", imp.annotations, "Directory of VOC XML files")
      ->required()
      ->check(CLI::ExistingDirectory);
  import_voc->add_option("--class", imp.class_name, "Object class")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Summary tables from run reports");
  report->add_option("files", rep.files, "Run report JSON files");
  report->add_option("--format", rep.format, "markdown or csv");
  report->add_option("--ab", rep.ab, "CSV of name,A,N,B final APs");
  report->add_option("--curve-out", rep.curve_out, "Box-filtered mean advantage curve CSV");
  report->add_option("--window", rep.window, "Box filter window (odd)");
  report->add_option("--grid", rep.grid, "Curve grid steps")->check(CLI::PositiveNumber);

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "HTTP service for the annotation UI and workers");
  serve->add_option("--store", srv.store, "Store directory")->required()->envname("IADET_STORE");
  serve->add_option("--images", srv.images, "Image directory (defaults to the store)")
      ->envname("IADET_IMAGES");
  serve->add_option("--host", srv.host)->envname("IADET_HOST");
  serve->add_option("--port", srv.port)->envname("IADET_PORT");
  serve->add_option("--strategy", srv.strategy)
      ->check(CLI::IsMember({"random", "sequential"}))
      ->envname("IADET_STRATEGY");
  serve->add_option("--seed", srv.seed)->envname("IADET_SEED");
  serve->add_option("--worker-url", srv.worker_url)->envname("IADET_WORKER_URL");
  serve->add_option("--v", srv.training_speed)->check(CLI::PositiveNumber);
  serve->add_option("--b", srv.batch_size)->check(CLI::PositiveNumber);

  std::string init_store;
  std::string init_images;
  auto* init = app.add_subcommand("init", "Create a store from an image directory");
  init->add_option("--store", init_store)->required()->envname("IADET_STORE");
  init->add_option("--images", init_images)->required()->check(CLI::ExistingDirectory);

  WorkerArgs wrk;
  auto* worker = app.add_subcommand("worker", "Reference synthetic trainer worker");
  worker->add_option("--store", wrk.store, "Store holding the ground truth")->required();
  worker->add_option("--core-url", wrk.core_url, "Service to pull snapshots from")
      ->envname("IADET_CORE_URL");
  worker->add_option("--mode", wrk.mode)->check(CLI::IsMember({"echo", "learning-curve"}));
  worker->add_option("--host", wrk.host);
  worker->add_option("--port", wrk.port)->envname("IADET_WORKER_PORT");
  worker->add_option("--train-interval", wrk.train_interval)->check(CLI::PositiveNumber);
  worker->add_option("--seed", wrk.seed);

  std::vector<const char*> argv{"iadet"};
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (import_voc->parsed()) return cmd_import(imp, out, err);
    if (report->parsed()) return cmd_report(rep, out, err);
    if (serve->parsed()) return cmd_serve(srv, out, err);
    if (worker->parsed()) return cmd_worker(wrk, out, err);
    if (init->parsed()) {
      auto store = AnnotationStore::create(init_store, scan_dataset(init_images));
      out << fmt::format("created store with {} images\n", store->size());
      return 0;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace iadet::cli
