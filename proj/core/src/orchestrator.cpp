#include "iadet/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "iadet/error.hpp"
#include "json_util.hpp"
#include "iadet/protocol.hpp"

namespace iadet {
namespace {

using ojson = nlohmann::ordered_json;

ModelVersion untrained_model() {
  ModelVersion v;
  v.training_meta = TrainingMeta{};
  return v;
}

}  // namespace

std::string_view to_string(RunLabel label) noexcept {
  switch (label) {
    case RunLabel::kA: return "A";
    case RunLabel::kN: return "N";
    case RunLabel::kM: return "M";
    case RunLabel::kB: return "B";
  }
  return "A";
}

RunLabel parse_run_label(std::string_view name) {
  if (name == "A") return RunLabel::kA;
  if (name == "N") return RunLabel::kN;
  if (name == "M") return RunLabel::kM;
  if (name == "B") return RunLabel::kB;
  throw Error(ErrorCode::kInvalidArgument, "unknown run label '" + std::string(name) + "'");
}

ModelRegistry::ModelRegistry() : ModelRegistry(untrained_model()) {}

ModelRegistry::ModelRegistry(ModelVersion initial)
    : latest_(std::make_shared<const ModelVersion>(initial)), history_{initial} {}

std::shared_ptr<const ModelVersion> ModelRegistry::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

void ModelRegistry::publish(ModelVersion next) {
  std::lock_guard lock(mutex_);
  if (next.version <= latest_->version) {
    throw Error(ErrorCode::kNonMonotoneVersion,
                "model version " + std::to_string(next.version) + " is not above current " +
                    std::to_string(latest_->version));
  }
  history_.push_back(next);
  latest_ = std::make_shared<const ModelVersion>(std::move(next));
}

std::uint64_t ModelRegistry::next_version() const {
  std::lock_guard lock(mutex_);
  return latest_->version + 1;
}

std::vector<ModelVersion> ModelRegistry::history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

std::string to_json_line(const Event& event) {
  ojson j;
  j["t"] = event.t;
  j["kind"] = event.kind;
  if (event.image_id) j["image_id"] = *event.image_id;
  if (event.model_version) j["model_version"] = *event.model_version;
  if (event.interactions) j["interactions"] = *event.interactions;
  if (event.boxes) {
    ojson boxes = ojson::array();
    for (const Box& b : *event.boxes) boxes.push_back({b.x_min(), b.y_min(), b.x_max(), b.y_max()});
    j["boxes"] = std::move(boxes);
  }
  if (event.degraded) j["degraded"] = true;
  return j.dump();
}

Event parse_event_line(std::string_view line) {
  try {
    const ojson j = ojson::parse(line);
    Event e;
    e.t = j.at("t").get<double>();
    e.kind = j.at("kind").get<std::string>();
    if (j.contains("image_id")) e.image_id = j["image_id"].get<std::string>();
    if (j.contains("model_version")) e.model_version = detail::as_unsigned(j["model_version"]);
    if (j.contains("interactions")) e.interactions = detail::as_unsigned(j["interactions"]);
    if (j.contains("boxes")) {
      std::vector<Box> boxes;
      for (const auto& b : j["boxes"]) {
        boxes.emplace_back(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                           b.at(3).get<double>());
      }
      e.boxes = std::move(boxes);
    }
    e.degraded = j.value("degraded", false);
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("malformed event line: ") + ex.what());
  }
}

void EventLog::append(Event event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::string EventLog::to_jsonl() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const Event& e : events_) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

std::vector<Event> EventLog::parse_jsonl(std::string_view text) {
  std::vector<Event> events;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) events.push_back(parse_event_line(line));
  }
  return events;
}

std::vector<ImageRecord> replay_annotations(std::vector<ImageRecord> initial,
                                            std::span<const Event> events) {
  std::map<std::string, ImageRecord*, std::less<>> by_id;
  for (ImageRecord& r : initial) by_id[r.id] = &r;
  for (const Event& e : events) {
    if (e.kind != event_kind::kAnnotate) continue;
    if (!e.image_id || !e.boxes) {
      throw Error(ErrorCode::kParse, "annotate event lacks image_id or boxes");
    }
    auto it = by_id.find(*e.image_id);
    if (it == by_id.end()) throw Error(ErrorCode::kNotFound, "unknown image id " + *e.image_id);
    it->second->user_boxes = *e.boxes;
    it->second->labeled = true;
    it->second->labeled_at = e.t;
  }
  return initial;
}

std::optional<ModelVersion> BuiltInTrainer::tick(const AnnotationSnapshot& snapshot, double now,
                                                 ModelRegistry& registry) {
  if (snapshot.records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot train on an empty snapshot");
  }
  ++epochs_;
  ModelVersion next;
  next.version = registry.next_version();
  next.created_at = now;
  next.source = ModelSource::kBuiltIn;
  next.training_meta = TrainingMeta{epochs_, snapshot.snapshot_version, snapshot.records.size(),
                                    std::nullopt};
  registry.publish(next);
  return next;
}

ExternalTrainer::ExternalTrainer(std::shared_ptr<WorkerClient> worker, RetryPolicy retry)
    : worker_(std::move(worker)), retry_(retry) {}

std::optional<ModelVersion> ExternalTrainer::tick(const AnnotationSnapshot& snapshot, double now,
                                                  ModelRegistry& registry) {
  std::optional<WorkerStatus> status;
  auto backoff = retry_.initial_backoff;
  for (int attempt = 0; attempt < std::max(1, retry_.attempts); ++attempt) {
    try {
      status = worker_->status();
      break;
    } catch (const Error& e) {
      spdlog::debug("worker status failed (attempt {}): {}", attempt + 1, e.what());
      if (attempt + 1 < retry_.attempts) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
  }
  std::lock_guard lock(mutex_);
  if (!status) {
    ++failures_;
    return std::nullopt;
  }
  TrainingMeta meta{status->epochs, snapshot.snapshot_version, snapshot.records.size(),
                    status->last_loss};
  last_report_ = meta;
  if (status->model_version <= registry.latest()->version) return std::nullopt;
  ModelVersion next{status->model_version, now, ModelSource::kExternal, meta};
  try {
    registry.publish(next);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonMonotoneVersion) throw;
    return std::nullopt;
  }
  return next;
}

std::optional<TrainingMeta> ExternalTrainer::last_report() const {
  std::lock_guard lock(mutex_);
  return last_report_;
}

std::uint64_t ExternalTrainer::failures() const {
  std::lock_guard lock(mutex_);
  return failures_;
}

std::string_view to_string(CadenceMode mode) noexcept {
  return mode == CadenceMode::kPerCommit ? "per-commit" : "epoch";
}

CadenceMode parse_cadence(std::string_view name) {
  if (name == "per-commit") return CadenceMode::kPerCommit;
  if (name == "epoch") return CadenceMode::kEpoch;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown cadence '" + std::string(name) + "' (expected epoch or per-commit)");
}

double TrainerCadence::epoch_duration(std::uint64_t labeled_count) const {
  const std::uint64_t steps = (labeled_count + batch_size - 1) / batch_size;
  const double seconds = static_cast<double>(steps * batch_size) / training_speed;
  return std::max(min_interval, seconds);
}

void TrainerCadence::validate() const {
  if (!(training_speed > 0.0) || !std::isfinite(training_speed)) {
    throw Error(ErrorCode::kInvalidArgument, "training speed must be positive");
  }
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!(min_interval >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "minimum epoch interval must be non-negative");
  }
}

BackgroundTrainer::BackgroundTrainer(const AnnotationStore& store, Trainer& trainer,
                                     ModelRegistry& registry, TrainerCadence cadence,
                                     const Clock& clock, EventLog* log)
    : store_(store),
      trainer_(trainer),
      registry_(registry),
      cadence_(cadence),
      clock_(clock),
      log_(log),
      thread_([this](std::stop_token stop) { run(stop); }) {}

BackgroundTrainer::~BackgroundTrainer() { stop(); }

void BackgroundTrainer::notify() {
  std::lock_guard lock(mutex_);
  wake_.notify_all();
}

void BackgroundTrainer::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

void BackgroundTrainer::run(std::stop_token stop) {
  std::optional<std::uint64_t> trained;
  const bool periodic = trainer_.wants_periodic_ticks();
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(mutex_);
      auto changed = [&] { return !trained || store_.version() != *trained; };
      if (periodic) {
        wake_.wait_for(lock, stop, std::chrono::duration<double>(cadence_.min_interval), changed);
      } else {
        wake_.wait(lock, stop, changed);
      }
    }
    if (stop.stop_requested()) break;
    auto snap = store_.snapshot();
    if (snap->records.empty() && !periodic) {
      trained = snap->snapshot_version;
      continue;
    }
    if (!periodic) {
      std::unique_lock lock(mutex_);
      wake_.wait_for(lock, stop,
                     std::chrono::duration<double>(cadence_.epoch_duration(snap->records.size())),
                     [] { return false; });
      if (stop.stop_requested()) break;
    }
    try {
      auto published = trainer_.tick(*snap, clock_.now(), registry_);
      if (published && log_) {
        log_->append({.t = published->created_at,
                      .kind = std::string(event_kind::kPublish),
                      .model_version = published->version});
      }
    } catch (const Error& e) {
      spdlog::warn("trainer tick failed: {}", e.what());
    }
    trained = snap->snapshot_version;
  }
}

AnnotationLoop::AnnotationLoop(AnnotationStore& store, Detector& detector, Trainer& trainer,
                               ModelRegistry& registry, SelectionState selection,
                               LoopConfig config, EventLog& log)
    : store_(store),
      detector_(detector),
      trainer_(trainer),
      registry_(registry),
      selection_(std::move(selection)),
      config_(config),
      log_(log) {
  config_.cadence.validate();
}

Prediction AnnotationLoop::fetch_prediction(const ImageRecord& record) {
  const auto model = registry_.latest();
  try {
    return detector_.predict(record, *model);
  } catch (const Error& e) {
    spdlog::warn("prediction failed for {}: {}; annotating unassisted", record.id, e.what());
    Prediction degraded;
    degraded.image_id = record.id;
    degraded.model_version = model->version;
    degraded.degraded = true;
    return degraded;
  }
}

void AnnotationLoop::log_publish(const std::optional<ModelVersion>& published) {
  if (!published) return;
  log_.append({.t = published->created_at,
               .kind = std::string(event_kind::kPublish),
               .model_version = published->version});
}

LoopResult AnnotationLoop::run(Annotator& annotator, std::stop_token stop) {
  const bool virtual_time = config_.clock == ClockMode::kVirtual;
  const bool per_commit = config_.cadence.mode == CadenceMode::kPerCommit;
  VirtualClock virtual_clock;
  SteadyClock steady_clock;
  Clock& clock = virtual_time ? static_cast<Clock&>(virtual_clock) : steady_clock;

  // Virtual epoch cadence: at most one epoch in flight, trained on the
  // snapshot taken when it started.
  struct PendingEpoch {
    std::shared_ptr<const AnnotationSnapshot> snapshot;
    double end;
  };
  std::optional<PendingEpoch> pending;
  std::optional<std::uint64_t> trained;

  auto maybe_start_epoch = [&](double t) {
    if (pending || (trained && store_.version() == *trained)) return;
    auto snap = store_.snapshot();
    if (snap->records.empty()) return;
    pending = PendingEpoch{snap, t + config_.cadence.epoch_duration(snap->records.size())};
  };
  auto finish_epochs = [&](double t, bool inclusive) {
    while (pending && (pending->end < t || (inclusive && pending->end == t))) {
      const PendingEpoch done = *pending;
      pending.reset();
      virtual_clock.advance_to(done.end);
      log_publish(trainer_.tick(*done.snapshot, done.end, registry_));
      trained = done.snapshot->snapshot_version;
      maybe_start_epoch(done.end);
    }
  };

  std::optional<BackgroundTrainer> background;
  if (!virtual_time && !per_commit) {
    background.emplace(store_, trainer_, registry_, config_.cadence, clock, &log_);
  }

  LoopResult result;
  while (!selection_.done()) {
    if (stop.stop_requested()) {
      log_.append({.t = clock.now(), .kind = std::string(event_kind::kStop)});
      result.stopped = true;
      break;
    }
    const double t_open = clock.now();
    const std::string id = selection_.next_image();
    const ImageRecord record = *store_.get(id);
    const Prediction prediction = fetch_prediction(record);
    AnnotationOutcome outcome = annotator.annotate(record, prediction);

    const double t_commit = t_open + outcome.duration;
    if (virtual_time) {
      finish_epochs(t_commit, false);
      virtual_clock.advance_to(t_commit);
    } else {
      clock.sleep_until(t_commit, {});
    }
    const double committed_at = virtual_time ? t_commit : clock.now();
    store_.put_annotations(id, std::move(outcome.boxes), committed_at);
    selection_.mark_labeled(id);

    LoopRow row;
    row.image_id = id;
    row.t_open = t_open;
    row.t_commit = committed_at;
    row.model_version = prediction.model_version;
    row.interactions = outcome.interactions;
    row.gt_count = record.gt_boxes ? record.gt_boxes->size() : 0;
    row.match = outcome.match;
    row.degraded = prediction.degraded;
    log_.append({.t = committed_at,
                 .kind = std::string(event_kind::kAnnotate),
                 .image_id = id,
                 .model_version = prediction.model_version,
                 .interactions = outcome.interactions,
                 .boxes = store_.get(id)->user_boxes,
                 .degraded = prediction.degraded});
    result.rows.push_back(std::move(row));

    if (per_commit) {
      log_publish(trainer_.tick(*store_.snapshot(), committed_at, registry_));
    } else if (virtual_time) {
      maybe_start_epoch(committed_at);
      finish_epochs(committed_at, true);
    } else {
      background->notify();
    }
  }
  if (background) background->stop();
  result.elapsed = clock.now();
  return result;
}

}  // namespace iadet
