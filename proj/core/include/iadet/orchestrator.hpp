#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "iadet/clock.hpp"
#include "iadet/detectors.hpp"
#include "iadet/geometry.hpp"
#include "iadet/selection.hpp"
#include "iadet/store.hpp"

namespace iadet {

class WorkerClient;

/// A: trained during annotation. N: trained after unassisted annotation.
/// M: trained after assisted annotation. B: as M, initialised from A's final
/// state.
enum class RunLabel { kA, kN, kM, kB };

std::string_view to_string(RunLabel label) noexcept;
RunLabel parse_run_label(std::string_view name);

/// Latest published model behind a mutex-guarded pointer swap. Readers get a
/// complete ModelVersion, old or new, never a mix.
class ModelRegistry {
 public:
  /// Starts at version 0: the untrained model, no labeled images seen.
  ModelRegistry();
  explicit ModelRegistry(ModelVersion initial);

  std::shared_ptr<const ModelVersion> latest() const;

  /// Throws kNonMonotoneVersion unless next.version is above the current one.
  void publish(ModelVersion next);

  std::uint64_t next_version() const;
  std::vector<ModelVersion> history() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelVersion> latest_;
  std::vector<ModelVersion> history_;
};

namespace event_kind {
inline constexpr std::string_view kAnnotate = "annotate";
inline constexpr std::string_view kPublish = "publish";
inline constexpr std::string_view kStop = "stop";
}  // namespace event_kind

/// One line of the JSON-lines event log:
/// {t, kind, image_id?, model_version?, interactions?, boxes?, degraded?}.
/// boxes carries the committed annotation so the log alone rebuilds the store.
struct Event {
  double t = 0.0;
  std::string kind;
  std::optional<std::string> image_id;
  std::optional<std::uint64_t> model_version;
  std::optional<std::uint64_t> interactions;
  std::optional<std::vector<Box>> boxes;
  bool degraded = false;

  friend bool operator==(const Event&, const Event&) = default;
};

std::string to_json_line(const Event& event);
Event parse_event_line(std::string_view line);

class EventLog {
 public:
  void append(Event event);
  std::vector<Event> events() const;
  std::string to_jsonl() const;
  static std::vector<Event> parse_jsonl(std::string_view text);

 private:
  mutable std::mutex mutex_;
  std::vector<Event> events_;
};

/// Applies every annotate event, in order, to the initial records.
std::vector<ImageRecord> replay_annotations(std::vector<ImageRecord> initial,
                                            std::span<const Event> events);

class Trainer {
 public:
  virtual ~Trainer() = default;

  /// One training round over the snapshot. Returns the version it published,
  /// if any.
  virtual std::optional<ModelVersion> tick(const AnnotationSnapshot& snapshot, double now,
                                           ModelRegistry& registry) = 0;

  /// Whether the trainer should be polled even when no annotation changed.
  virtual bool wants_periodic_ticks() const { return false; }
};

/// Drives the synthetic detectors: each tick is one epoch over the snapshot
/// and publishes a version that has seen every snapshot record.
class BuiltInTrainer final : public Trainer {
 public:
  /// Throws kInvalidArgument on an empty snapshot.
  std::optional<ModelVersion> tick(const AnnotationSnapshot& snapshot, double now,
                                   ModelRegistry& registry) override;

  std::uint64_t epochs() const noexcept { return epochs_; }

 private:
  std::uint64_t epochs_ = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{50};
};

/// Mirrors a trainer worker: polls its status (retrying with exponential
/// backoff) and publishes any newer version it reports.
class ExternalTrainer final : public Trainer {
 public:
  ExternalTrainer(std::shared_ptr<WorkerClient> worker, RetryPolicy retry = {});

  std::optional<ModelVersion> tick(const AnnotationSnapshot& snapshot, double now,
                                   ModelRegistry& registry) override;
  bool wants_periodic_ticks() const override { return true; }

  std::optional<TrainingMeta> last_report() const;
  std::uint64_t failures() const;

 private:
  std::shared_ptr<WorkerClient> worker_;
  RetryPolicy retry_;
  mutable std::mutex mutex_;
  std::optional<TrainingMeta> last_report_;
  std::uint64_t failures_ = 0;
};

enum class CadenceMode {
  kPerCommit,  // train instantly after every annotation
  kEpoch,      // one epoch at a time, lasting epoch_duration(labeled images)
};

std::string_view to_string(CadenceMode mode) noexcept;
CadenceMode parse_cadence(std::string_view name);

/// When the background trainer ticks. An epoch over n images takes
/// max(min_interval, ceil(n / batch_size) * batch_size / training_speed) seconds.
struct TrainerCadence {
  CadenceMode mode = CadenceMode::kEpoch;
  double training_speed = 0.1;  // images per second
  std::uint64_t batch_size = 8;
  double min_interval = 1.0;

  double epoch_duration(std::uint64_t labeled_count) const;
  void validate() const;
};

/// Real-time trainer context. Waits for new annotations, trains for one epoch
/// of wall-clock time and ticks the trainer; stops and joins on destruction.
class BackgroundTrainer {
 public:
  BackgroundTrainer(const AnnotationStore& store, Trainer& trainer, ModelRegistry& registry,
                    TrainerCadence cadence, const Clock& clock, EventLog* log = nullptr);
  ~BackgroundTrainer();

  BackgroundTrainer(const BackgroundTrainer&) = delete;
  BackgroundTrainer& operator=(const BackgroundTrainer&) = delete;

  void notify();
  void stop();

 private:
  void run(std::stop_token stop);

  const AnnotationStore& store_;
  Trainer& trainer_;
  ModelRegistry& registry_;
  TrainerCadence cadence_;
  const Clock& clock_;
  EventLog* log_;
  std::mutex mutex_;
  std::condition_variable_any wake_;
  std::jthread thread_;
};

struct AnnotationOutcome {
  std::vector<Box> boxes;
  std::uint64_t interactions = 0;
  double duration = 0.0;  // seconds the annotator spends on the image
  std::optional<MatchResult> match;
};

/// Whoever turns a prediction into the final boxes: the robot or a UI.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual AnnotationOutcome annotate(const ImageRecord& record, const Prediction& prediction) = 0;
};

struct LoopConfig {
  ClockMode clock = ClockMode::kVirtual;
  TrainerCadence cadence;
};

struct LoopRow {
  std::string image_id;
  double t_open = 0.0;
  double t_commit = 0.0;
  std::uint64_t model_version = 0;
  std::uint64_t interactions = 0;
  std::size_t gt_count = 0;
  std::optional<MatchResult> match;
  bool degraded = false;
};

struct LoopResult {
  std::vector<LoopRow> rows;
  bool stopped = false;
  double elapsed = 0.0;
};

/// The assisted-annotation loop: select, predict with the latest model,
/// annotate, commit, notify the trainer. Each image is one atomic block of
/// annotator time; a model published while the image is open does not
/// affect it.
class AnnotationLoop {
 public:
  AnnotationLoop(AnnotationStore& store, Detector& detector, Trainer& trainer,
                 ModelRegistry& registry, SelectionState selection, LoopConfig config,
                 EventLog& log);

  /// Runs until every image is labeled or stop is requested.
  LoopResult run(Annotator& annotator, std::stop_token stop = {});

  const SelectionState& selection() const noexcept { return selection_; }

 private:
  Prediction fetch_prediction(const ImageRecord& record);
  void log_publish(const std::optional<ModelVersion>& published);

  AnnotationStore& store_;
  Detector& detector_;
  Trainer& trainer_;
  ModelRegistry& registry_;
  SelectionState selection_;
  LoopConfig config_;
  EventLog& log_;
};

}  // namespace iadet
