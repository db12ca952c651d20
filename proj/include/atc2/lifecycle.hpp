#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace atc2 {

enum class AnnotationState {
  QueuedUntouched,
  QueuedAnnotated,
  Annotated,
  Finished,
  Dropped,
  Deleted,
};

constexpr std::string_view to_string_view(AnnotationState s) {
  switch (s) {
    case AnnotationState::QueuedUntouched: return "QueuedUntouched";
    case AnnotationState::QueuedAnnotated: return "QueuedAnnotated";
    case AnnotationState::Annotated: return "Annotated";
    case AnnotationState::Finished: return "Finished";
    case AnnotationState::Dropped: return "Dropped";
    case AnnotationState::Deleted: return "Deleted";
  }
  return "?";
}

enum class LifecycleEventKind {
  Push,
  SaveAnnotation,
  RecheckOk,
  ThumbDown,
  MarkAnonymize,
  AgeTick,
  Export,
  Archive,
};

constexpr std::string_view to_string_view(LifecycleEventKind k) {
  switch (k) {
    case LifecycleEventKind::Push: return "Push";
    case LifecycleEventKind::SaveAnnotation: return "SaveAnnotation";
    case LifecycleEventKind::RecheckOk: return "RecheckOk";
    case LifecycleEventKind::ThumbDown: return "ThumbDown";
    case LifecycleEventKind::MarkAnonymize: return "MarkAnonymize";
    case LifecycleEventKind::AgeTick: return "AgeTick";
    case LifecycleEventKind::Export: return "Export";
    case LifecycleEventKind::Archive: return "Archive";
  }
  return "?";
}

std::optional<LifecycleEventKind> lifecycle_event_from(std::string_view s);

struct LifecycleEvent {
  LifecycleEventKind kind;
  std::int64_t now = 0;  // epoch seconds; carried by every event
};

struct LifecycleOptions {
  double stale_age_days = 30.0;    // QueuedUntouched older than this drops
  double dropped_purge_days = 7.0; // Dropped older than this deletes
};

struct AnnotationItem {
  std::string recording_id;
  AnnotationState state = AnnotationState::QueuedUntouched;
  int thumbs_down = 0;
  bool anonymize = false;
  std::optional<std::int64_t> dropped_at;
  std::int64_t created_at = 0;

  static AnnotationItem pushed(std::string recording_id, std::int64_t now) {
    AnnotationItem it;
    it.recording_id = std::move(recording_id);
    it.created_at = now;
    return it;
  }
};

// Applies one event and returns the updated item. AgeTick is always
// accepted (it only acts on stale queued / expired dropped items);
// anything not enabled in the current state throws IllegalTransition.
// Deleted absorbs AgeTick and rejects everything else.
AnnotationItem lifecycle_step(const AnnotationItem& item,
                              const LifecycleEvent& event,
                              const LifecycleOptions& opts = {});

}  // namespace atc2
