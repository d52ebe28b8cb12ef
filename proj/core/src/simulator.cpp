#include "iadet/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "format.hpp"
#include "iadet/error.hpp"
#include "json_util.hpp"
#include "iadet/metrics.hpp"
#include "iadet/protocol.hpp"
#include "iadet/random.hpp"

namespace iadet {
namespace {

using ojson = nlohmann::ordered_json;
using detail::format_double;

std::uint64_t count_committed(std::span<const double> commits, double t) {
  return static_cast<std::uint64_t>(std::upper_bound(commits.begin(), commits.end(), t) -
                                    commits.begin());
}

double ratio_of(std::uint64_t assisted, std::uint64_t unassisted) {
  if (unassisted == 0) return assisted == 0 ? 1.0 : static_cast<double>(assisted);
  return static_cast<double>(assisted) / static_cast<double>(unassisted);
}

ojson config_to_json(const SimulationConfig& c) {
  ojson j;
  j["rate"] = c.rate;
  j["training_speed"] = c.cadence.training_speed;
  j["batch_size"] = c.cadence.batch_size;
  j["min_epoch_seconds"] = c.cadence.min_interval;
  j["cadence"] = to_string(c.cadence.mode);
  j["clock"] = c.clock == ClockMode::kVirtual ? "virtual" : "real";
  j["detector"] = to_string(c.detector);
  ojson d;
  d["p_max"] = c.detector_config.p_max;
  d["tau"] = c.detector_config.tau;
  d["jitter_sigma"] = c.detector_config.jitter_sigma;
  d["fp_rate"] = c.detector_config.fp_rate;
  d["score_gap"] = c.detector_config.score_gap;
  d["seed"] = c.detector_config.seed;
  j["detector_config"] = std::move(d);
  j["strategy"] = to_string(c.strategy);
  j["seed"] = c.seed;
  j["iou_threshold"] = c.iou_threshold;
  ojson cost;
  cost["clicks_per_box_create"] = c.cost.clicks_per_box_create;
  cost["clicks_per_box_remove"] = c.cost.clicks_per_box_remove;
  cost["keypress_navigate"] = c.cost.keypress_navigate;
  cost["keypress_clear_all"] = c.cost.keypress_clear_all;
  cost["include_navigation_in_unassisted"] = c.cost.include_navigation_in_unassisted;
  j["cost"] = std::move(cost);
  j["worker_url"] = c.worker_url;
  return j;
}

SimulationConfig config_from_json(const ojson& j) {
  SimulationConfig c;
  c.rate = j.at("rate").get<double>();
  c.cadence.training_speed = j.at("training_speed").get<double>();
  c.cadence.batch_size = detail::as_unsigned(j.at("batch_size"));
  c.cadence.min_interval = j.at("min_epoch_seconds").get<double>();
  c.cadence.mode = parse_cadence(j.at("cadence").get<std::string>());
  c.clock = j.at("clock").get<std::string>() == "real" ? ClockMode::kReal : ClockMode::kVirtual;
  c.detector = parse_detector_kind(j.at("detector").get<std::string>());
  const ojson& d = j.at("detector_config");
  c.detector_config.p_max = d.at("p_max").get<double>();
  c.detector_config.tau = d.at("tau").get<double>();
  c.detector_config.jitter_sigma = d.at("jitter_sigma").get<double>();
  c.detector_config.fp_rate = d.at("fp_rate").get<double>();
  c.detector_config.score_gap = d.at("score_gap").get<double>();
  c.detector_config.seed = detail::as_unsigned(d.at("seed"));
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.seed = detail::as_unsigned(j.at("seed"));
  c.iou_threshold = j.at("iou_threshold").get<double>();
  const ojson& cost = j.at("cost");
  c.cost.clicks_per_box_create = detail::as_unsigned(cost.at("clicks_per_box_create"));
  c.cost.clicks_per_box_remove = detail::as_unsigned(cost.at("clicks_per_box_remove"));
  c.cost.keypress_navigate = detail::as_unsigned(cost.at("keypress_navigate"));
  c.cost.keypress_clear_all = detail::as_unsigned(cost.at("keypress_clear_all"));
  c.cost.include_navigation_in_unassisted =
      cost.at("include_navigation_in_unassisted").get<bool>();
  c.worker_url = j.value("worker_url", std::string());
  return c;
}

}  // namespace

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::kLearningCurve: return "learning-curve";
    case DetectorKind::kPerfect: return "perfect";
    case DetectorKind::kSpurious: return "spurious";
    case DetectorKind::kSilent: return "silent";
    case DetectorKind::kExternal: return "external";
  }
  return "learning-curve";
}

DetectorKind parse_detector_kind(std::string_view name) {
  for (DetectorKind k : {DetectorKind::kLearningCurve, DetectorKind::kPerfect,
                         DetectorKind::kSpurious, DetectorKind::kSilent, DetectorKind::kExternal}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown detector '" + std::string(name) + "'");
}

void SimulationConfig::validate() const {
  AnnotatorRate{rate};
  cadence.validate();
  cost.validate();
  detector_config.validate();
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "iou threshold must lie in (0, 1]");
  }
  if (detector == DetectorKind::kExternal && worker_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "external detector needs a worker url");
  }
}

std::vector<ImageRecord> make_synthetic_dataset(const SyntheticDatasetConfig& config) {
  if (config.width <= 0 || config.height <= 0 || !(config.min_box_fraction > 0.0) ||
      !(config.max_box_fraction >= config.min_box_fraction) || config.max_box_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid synthetic dataset configuration");
  }
  std::vector<ImageRecord> records;
  records.reserve(config.images);
  const double w = config.width;
  const double h = config.height;
  for (std::size_t i = 0; i < config.images; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "img_%05zu", i);
    ImageRecord r;
    r.id = id;
    r.path = r.id + ".png";
    r.width = config.width;
    r.height = config.height;
    DeterministicStream rng(stream_key(config.seed, 0, r.id));
    const std::uint64_t count = 1 + rng.poisson(config.mean_extra_boxes);
    std::vector<Box> boxes;
    for (std::uint64_t b = 0; b < count; ++b) {
      const double bw = rng.uniform(config.min_box_fraction, config.max_box_fraction) * w;
      const double bh = rng.uniform(config.min_box_fraction, config.max_box_fraction) * h;
      const double x0 = rng.uniform(0.0, w - bw);
      const double y0 = rng.uniform(0.0, h - bh);
      boxes.emplace_back(x0, y0, x0 + bw, y0 + bh);
    }
    r.gt_boxes = std::move(boxes);
    records.push_back(std::move(r));
  }
  return records;
}

RobotAnnotator::RobotAnnotator(AnnotatorRate rate, CostModelConfig cost, double iou_threshold)
    : rate_(rate), cost_(cost), iou_threshold_(iou_threshold) {}

AnnotationOutcome RobotAnnotator::annotate(const ImageRecord& record,
                                           const Prediction& prediction) {
  if (!record.gt_boxes) {
    throw Error(ErrorCode::kMissingGroundTruth, "robot annotator needs ground truth for " + record.id);
  }
  AnnotationOutcome out;
  out.match = match_detections(prediction.kept_boxes, *record.gt_boxes, iou_threshold_);
  out.interactions = assisted_interactions(out.match->tp, out.match->fp, out.match->fn, cost_);
  out.duration = interactions_to_time(out.interactions, rate_);
  out.boxes = *record.gt_boxes;
  return out;
}

std::unique_ptr<Detector> make_detector(const SimulationConfig& config) {
  switch (config.detector) {
    case DetectorKind::kLearningCurve:
      return std::make_unique<SyntheticDetector>(config.detector_config);
    case DetectorKind::kPerfect:
      return std::make_unique<OracleDetector>(OracleMode::kPerfect, config.iou_threshold);
    case DetectorKind::kSpurious:
      return std::make_unique<OracleDetector>(OracleMode::kSpurious, config.iou_threshold);
    case DetectorKind::kSilent:
      return std::make_unique<OracleDetector>(OracleMode::kSilent, config.iou_threshold);
    case DetectorKind::kExternal:
      return std::make_unique<ExternalDetector>(
          std::make_shared<WorkerClient>(WorkerEndpoint{config.worker_url}));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown detector kind");
}

double unassisted_baseline(std::span<const ImageRecord> dataset, const SimulationConfig& config) {
  std::uint64_t total = 0;
  for (const ImageRecord& r : dataset) {
    if (!r.gt_boxes) {
      throw Error(ErrorCode::kMissingGroundTruth, "image " + r.id + " has no ground truth");
    }
    total += unassisted_interactions(r.gt_boxes->size(), config.cost);
  }
  return interactions_to_time(total, AnnotatorRate(config.rate));
}

SimulationResult simulate_run(std::span<const ImageRecord> dataset,
                              const SimulationConfig& config, std::string name) {
  config.validate();
  for (const ImageRecord& r : dataset) {
    if (!r.gt_boxes) {
      throw Error(ErrorCode::kMissingGroundTruth,
                  "image " + r.id + " has no ground truth; run import-voc first");
    }
  }

  std::vector<ImageRecord> fresh(dataset.begin(), dataset.end());
  std::vector<std::string> ids;
  for (ImageRecord& r : fresh) {
    r.user_boxes.clear();
    r.labeled = false;
    r.labeled_at.reset();
    ids.push_back(r.id);
  }
  AnnotationStore store(fresh);

  std::unique_ptr<Detector> detector;
  std::unique_ptr<Trainer> trainer;
  if (config.detector == DetectorKind::kExternal) {
    auto worker = std::make_shared<WorkerClient>(WorkerEndpoint{config.worker_url});
    detector = std::make_unique<ExternalDetector>(worker);
    trainer = std::make_unique<ExternalTrainer>(worker);
  } else {
    detector = make_detector(config);
    trainer = std::make_unique<BuiltInTrainer>();
  }

  ModelRegistry registry;
  EventLog log;
  AnnotationLoop loop(store, *detector, *trainer, registry,
                      SelectionState(std::move(ids), config.strategy, config.seed),
                      LoopConfig{config.clock, config.cadence}, log);
  RobotAnnotator robot(AnnotatorRate(config.rate), config.cost, config.iou_threshold);
  const LoopResult result = loop.run(robot);

  RunReport report;
  report.name = std::move(name);
  report.config = config;
  const AnnotatorRate rate(config.rate);
  std::uint64_t cumulative = 0;
  for (const LoopRow& row : result.rows) {
    ReportRow out;
    out.image_id = row.image_id;
    out.t_open = row.t_open;
    out.t_commit = row.t_commit;
    out.tp = row.match->tp;
    out.fp = row.match->fp;
    out.fn = row.match->fn;
    out.gt_count = row.gt_count;
    out.interactions = row.interactions;
    out.model_version = row.model_version;
    out.degraded = row.degraded;
    report.rows.push_back(out);

    cumulative += row.interactions;
    report.unassisted_interactions += unassisted_interactions(row.gt_count, config.cost);
    const double t = config.clock == ClockMode::kVirtual
                         ? interactions_to_time(cumulative, rate)
                         : row.t_commit;
    report.timeline.push_back({t, report.timeline.size() + 1});
  }
  for (const ModelVersion& m : registry.history()) {
    report.models.push_back({m.created_at, m.version, m.labeled_count()});
  }
  report.assisted_interactions = cumulative;
  report.t_assisted = interactions_to_time(cumulative, rate);
  report.t_unassisted = interactions_to_time(report.unassisted_interactions, rate);
  report.ratio = report.t_unassisted > 0.0 ? report.t_assisted / report.t_unassisted : 0.0;
  report.improvement_percent = (1.0 - report.ratio) * 100.0;

  return {std::move(report), log.events(), store.records()};
}

RunReport simulate(std::span<const ImageRecord> dataset, const SimulationConfig& config,
                   std::string name) {
  return simulate_run(dataset, config, std::move(name)).report;
}

std::vector<double> assisted_schedule(const RunReport& report) {
  std::vector<double> out;
  out.reserve(report.timeline.size());
  for (const TimelinePoint& p : report.timeline) out.push_back(p.t);
  return out;
}

std::vector<double> unassisted_schedule(const RunReport& report) {
  const AnnotatorRate rate(report.config.rate);
  std::vector<double> out;
  out.reserve(report.rows.size());
  std::uint64_t cumulative = 0;
  for (const ReportRow& row : report.rows) {
    cumulative += unassisted_interactions(row.gt_count, report.config.cost);
    out.push_back(interactions_to_time(cumulative, rate));
  }
  return out;
}

double advantage_at(std::span<const double> assisted_commits,
                    std::span<const double> unassisted_commits, double t) {
  return ratio_of(count_committed(assisted_commits, t), count_committed(unassisted_commits, t));
}

std::vector<AdvantagePoint> advantage_curve(std::span<const double> assisted_commits,
                                            std::span<const double> unassisted_commits,
                                            std::size_t grid_points) {
  if (grid_points == 0) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one step");
  double end = 0.0;
  if (!assisted_commits.empty()) end = std::max(end, assisted_commits.back());
  if (!unassisted_commits.empty()) end = std::max(end, unassisted_commits.back());
  std::vector<AdvantagePoint> curve;
  curve.reserve(grid_points + 1);
  for (std::size_t j = 0; j <= grid_points; ++j) {
    const double t = j == grid_points ? end : end * static_cast<double>(j) / grid_points;
    AdvantagePoint p;
    p.t = t;
    p.k_assisted = count_committed(assisted_commits, t);
    p.k_unassisted = count_committed(unassisted_commits, t);
    p.ratio = ratio_of(p.k_assisted, p.k_unassisted);
    curve.push_back(p);
  }
  return curve;
}

std::vector<AdvantagePoint> advantage_curve(const RunReport& report, std::size_t grid_points) {
  const auto assisted = assisted_schedule(report);
  const auto unassisted = unassisted_schedule(report);
  return advantage_curve(assisted, unassisted, grid_points);
}

ModelVersion model_at(const RunReport& report, double t) {
  ModelVersion current;
  current.training_meta = TrainingMeta{};
  for (const PublishedModel& m : report.models) {
    if (m.t > t) break;
    current.version = m.version;
    current.created_at = m.t;
    current.training_meta->labeled_count = m.labeled_count;
  }
  return current;
}

namespace {

double evaluate_model(const ModelVersion& model, std::span<const ImageRecord> eval_split,
                      Detector& detector, double iou_threshold) {
  std::vector<EvalSample> samples;
  samples.reserve(eval_split.size());
  for (const ImageRecord& r : eval_split) {
    if (!r.gt_boxes) {
      throw Error(ErrorCode::kMissingGroundTruth, "evaluation image " + r.id + " lacks ground truth");
    }
    Prediction pred = detector.predict(r, model);
    samples.push_back({r.id, std::move(pred.raw_boxes), *r.gt_boxes});
  }
  return average_precision(samples, iou_threshold);
}

void check_eval_split(const RunReport& report, std::span<const ImageRecord> eval_split) {
  if (eval_split.empty()) {
    throw Error(ErrorCode::kEmptyEvalSplit, "evaluation split is empty");
  }
  std::set<std::string, std::less<>> trained;
  for (const ReportRow& row : report.rows) trained.insert(row.image_id);
  for (const ImageRecord& r : eval_split) {
    if (trained.contains(r.id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "evaluation image " + r.id + " was annotated during the run");
    }
  }
}

}  // namespace

std::vector<std::pair<double, double>> ap_over_time(const RunReport& report,
                                                    std::span<const ImageRecord> eval_split,
                                                    std::span<const double> checkpoints,
                                                    Detector& detector) {
  check_eval_split(report, eval_split);
  std::vector<std::pair<double, double>> series;
  for (double t : checkpoints) {
    series.emplace_back(
        t, evaluate_model(model_at(report, t), eval_split, detector, report.config.iou_threshold));
  }
  return series;
}

std::vector<std::pair<RunLabel, double>> final_ap_by_label(const RunReport& report,
                                                           std::span<const ImageRecord> eval_split,
                                                           Detector& detector) {
  check_eval_split(report, eval_split);
  const double thr = report.config.iou_threshold;
  const ModelVersion during = model_at(report, report.t_assisted);
  ModelVersion after = during;
  after.version = report.models.empty() ? 1 : report.models.back().version + 1;
  after.training_meta = TrainingMeta{};
  after.training_meta->labeled_count = report.rows.size();
  const double ap_after = evaluate_model(after, eval_split, detector, thr);
  return {{RunLabel::kA, evaluate_model(during, eval_split, detector, thr)},
          {RunLabel::kN, ap_after},
          {RunLabel::kM, ap_after},
          {RunLabel::kB, ap_after}};
}

std::string report_to_json(const RunReport& report) {
  ojson j;
  j["name"] = report.name;
  j["config"] = config_to_json(report.config);
  ojson totals;
  totals["images"] = report.rows.size();
  totals["assisted_interactions"] = report.assisted_interactions;
  totals["unassisted_interactions"] = report.unassisted_interactions;
  totals["t_assisted"] = report.t_assisted;
  totals["t_unassisted"] = report.t_unassisted;
  totals["ratio"] = report.ratio;
  totals["improvement_percent"] = report.improvement_percent;
  j["totals"] = std::move(totals);
  ojson rows = ojson::array();
  for (const ReportRow& r : report.rows) {
    ojson row;
    row["image_id"] = r.image_id;
    row["t_open"] = r.t_open;
    row["t_commit"] = r.t_commit;
    row["tp"] = r.tp;
    row["fp"] = r.fp;
    row["fn"] = r.fn;
    row["gt_count"] = r.gt_count;
    row["interactions"] = r.interactions;
    row["model_version"] = r.model_version;
    row["degraded"] = r.degraded;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  ojson models = ojson::array();
  for (const PublishedModel& m : report.models) {
    models.push_back({{"t", m.t}, {"version", m.version}, {"labeled_count", m.labeled_count}});
  }
  j["models"] = std::move(models);
  ojson timeline = ojson::array();
  for (const TimelinePoint& p : report.timeline) timeline.push_back({p.t, p.k});
  j["timeline"] = std::move(timeline);
  return j.dump(2) + "\n";
}

RunReport report_from_json(std::string_view json) {
  try {
    const ojson j = ojson::parse(json);
    RunReport r;
    r.name = j.value("name", std::string());
    r.config = config_from_json(j.at("config"));
    const ojson& totals = j.at("totals");
    r.assisted_interactions = detail::as_unsigned(totals.at("assisted_interactions"));
    r.unassisted_interactions = detail::as_unsigned(totals.at("unassisted_interactions"));
    r.t_assisted = totals.at("t_assisted").get<double>();
    r.t_unassisted = totals.at("t_unassisted").get<double>();
    r.ratio = totals.at("ratio").get<double>();
    r.improvement_percent = totals.at("improvement_percent").get<double>();
    for (const auto& row : j.at("rows")) {
      ReportRow out;
      out.image_id = row.at("image_id").get<std::string>();
      out.t_open = row.at("t_open").get<double>();
      out.t_commit = row.at("t_commit").get<double>();
      out.tp = detail::as_unsigned(row.at("tp"));
      out.fp = detail::as_unsigned(row.at("fp"));
      out.fn = detail::as_unsigned(row.at("fn"));
      out.gt_count = detail::as_unsigned(row.at("gt_count"));
      out.interactions = detail::as_unsigned(row.at("interactions"));
      out.model_version = detail::as_unsigned(row.at("model_version"));
      out.degraded = row.at("degraded").get<bool>();
      r.rows.push_back(std::move(out));
    }
    for (const auto& m : j.at("models")) {
      r.models.push_back({m.at("t").get<double>(), detail::as_unsigned(m.at("version")),
                          detail::as_unsigned(m.at("labeled_count"))});
    }
    for (const auto& p : j.at("timeline")) {
      r.timeline.push_back({p.at(0).get<double>(), detail::as_unsigned(p.at(1))});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed run report: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed run report: ") + e.what());
  }
}

std::string report_timeline_csv(const RunReport& report) {
  std::string out = "t,image_id,tp,fp,fn,I_i,model_version,k_A\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ReportRow& r = report.rows[i];
    const TimelinePoint& p = report.timeline.at(i);
    out += format_double(p.t) + ',' + r.image_id + ',' + std::to_string(r.tp) + ',' +
           std::to_string(r.fp) + ',' + std::to_string(r.fn) + ',' +
           std::to_string(r.interactions) + ',' + std::to_string(r.model_version) + ',' +
           std::to_string(p.k) + '\n';
  }
  return out;
}

}  // namespace iadet
