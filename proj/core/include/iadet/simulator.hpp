#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iadet/clock.hpp"
#include "iadet/cost_model.hpp"
#include "iadet/detectors.hpp"
#include "iadet/orchestrator.hpp"
#include "iadet/selection.hpp"
#include "iadet/store.hpp"

namespace iadet {

enum class DetectorKind {
  kLearningCurve,  // SyntheticDetector
  kPerfect,
  kSpurious,
  kSilent,
  kExternal,  // trainer worker over HTTP
};

std::string_view to_string(DetectorKind kind) noexcept;
DetectorKind parse_detector_kind(std::string_view name);

struct SimulationConfig {
  double rate = 1.0;  // robot interactions per second
  TrainerCadence cadence;
  CostModelConfig cost;
  DetectorKind detector = DetectorKind::kLearningCurve;
  SyntheticDetectorConfig detector_config;
  StrategyKind strategy = StrategyKind::kRandom;
  std::uint64_t seed = 0;
  double iou_threshold = kDefaultIouThreshold;
  ClockMode clock = ClockMode::kVirtual;
  std::string worker_url;  // kExternal only

  void validate() const;
};

/// Images of a fixed size with 1 + Poisson(mean_extra_boxes) ground-truth
/// boxes each, sides drawn between the two fractions of the image side.
struct SyntheticDatasetConfig {
  std::size_t images = 420;
  int width = 500;
  int height = 375;
  double mean_extra_boxes = 2.0;
  double min_box_fraction = 0.1;
  double max_box_fraction = 0.5;
  std::uint64_t seed = 0;
};

std::vector<ImageRecord> make_synthetic_dataset(const SyntheticDatasetConfig& config);

/// Annotates perfectly from ground truth at a fixed rate, choosing the
/// cheaper of correcting or clearing the prediction.
class RobotAnnotator final : public Annotator {
 public:
  RobotAnnotator(AnnotatorRate rate, CostModelConfig cost, double iou_threshold);
  AnnotationOutcome annotate(const ImageRecord& record, const Prediction& prediction) override;

 private:
  AnnotatorRate rate_;
  CostModelConfig cost_;
  double iou_threshold_;
};

struct ReportRow {
  std::string image_id;
  double t_open = 0.0;
  double t_commit = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t gt_count = 0;
  std::uint64_t interactions = 0;
  std::uint64_t model_version = 0;
  bool degraded = false;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct PublishedModel {
  double t = 0.0;
  std::uint64_t version = 0;
  std::uint64_t labeled_count = 0;

  friend bool operator==(const PublishedModel&, const PublishedModel&) = default;
};

struct TimelinePoint {
  double t = 0.0;
  std::uint64_t k = 0;  // images committed by t

  friend bool operator==(const TimelinePoint&, const TimelinePoint&) = default;
};

struct RunReport {
  std::string name;
  SimulationConfig config;
  std::vector<ReportRow> rows;  // in annotation order
  std::vector<PublishedModel> models;
  std::vector<TimelinePoint> timeline;
  std::uint64_t assisted_interactions = 0;
  std::uint64_t unassisted_interactions = 0;
  double t_assisted = 0.0;
  double t_unassisted = 0.0;
  double ratio = 0.0;
  double improvement_percent = 0.0;
};

struct SimulationResult {
  RunReport report;
  std::vector<Event> events;
  std::vector<ImageRecord> final_records;
};

std::unique_ptr<Detector> make_detector(const SimulationConfig& config);

/// Robot-annotator run over a dataset whose every image has ground truth.
/// Throws kMissingGroundTruth before touching anything otherwise.
SimulationResult simulate_run(std::span<const ImageRecord> dataset,
                              const SimulationConfig& config, std::string name = "");

RunReport simulate(std::span<const ImageRecord> dataset, const SimulationConfig& config,
                   std::string name = "");

/// Sum of unassisted image costs over the rate, in seconds.
double unassisted_baseline(std::span<const ImageRecord> dataset, const SimulationConfig& config);

/// Commit times of the assisted run, and of the same image order annotated
/// without assistance (each image one atomic block).
std::vector<double> assisted_schedule(const RunReport& report);
std::vector<double> unassisted_schedule(const RunReport& report);

struct AdvantagePoint {
  double t = 0.0;
  std::uint64_t k_assisted = 0;
  std::uint64_t k_unassisted = 0;
  double ratio = 1.0;
};

/// k_A(t) / k_N(t) on grid_points + 1 uniform samples over [0, max end time].
/// With no unassisted commit yet the denominator counts as one image, and
/// 0/0 is 1.
std::vector<AdvantagePoint> advantage_curve(std::span<const double> assisted_commits,
                                            std::span<const double> unassisted_commits,
                                            std::size_t grid_points = 200);
std::vector<AdvantagePoint> advantage_curve(const RunReport& report,
                                            std::size_t grid_points = 200);

/// Ratio at an arbitrary time, same conventions as advantage_curve.
double advantage_at(std::span<const double> assisted_commits,
                    std::span<const double> unassisted_commits, double t);

/// Model that was current at time t in the run.
ModelVersion model_at(const RunReport& report, double t);

/// AP of the model current at each checkpoint on a held-out split.
std::vector<std::pair<double, double>> ap_over_time(const RunReport& report,
                                                    std::span<const ImageRecord> eval_split,
                                                    std::span<const double> checkpoints,
                                                    Detector& detector);

/// Final model of a run under each label, evaluated on a held-out split. A is
/// the background model at the end of the run; N, M and B stand for a model
/// trained after annotation on the full dataset. The built-in trainer has no
/// weights, so M and B coincide with N here.
std::vector<std::pair<RunLabel, double>> final_ap_by_label(const RunReport& report,
                                                           std::span<const ImageRecord> eval_split,
                                                           Detector& detector);

/// Canonical report JSON (fixed key order, trailing newline).
std::string report_to_json(const RunReport& report);
RunReport report_from_json(std::string_view json);

/// t,image_id,tp,fp,fn,I_i,model_version,k_A with t the commit time.
std::string report_timeline_csv(const RunReport& report);

}  // namespace iadet
