#include "atc2/lifecycle.hpp"

#include "atc2/error.hpp"

namespace atc2 {

std::optional<LifecycleEventKind> lifecycle_event_from(std::string_view s) {
  using K = LifecycleEventKind;
  for (K k : {K::Push, K::SaveAnnotation, K::RecheckOk, K::ThumbDown,
              K::MarkAnonymize, K::AgeTick, K::Export, K::Archive})
    if (s == to_string_view(k)) return k;
  return std::nullopt;
}

namespace {

[[noreturn]] void reject(const AnnotationItem& item, const LifecycleEvent& ev) {
  throw AtcError(ErrorCode::IllegalTransition,
                 std::string(to_string_view(ev.kind)) + " not enabled in " +
                     std::string(to_string_view(item.state)));
}

bool queued(AnnotationState s) {
  return s == AnnotationState::QueuedUntouched ||
         s == AnnotationState::QueuedAnnotated;
}

}  // namespace

AnnotationItem lifecycle_step(const AnnotationItem& item,
                              const LifecycleEvent& ev,
                              const LifecycleOptions& opts) {
  using S = AnnotationState;
  if (item.state == S::Deleted) {
    if (ev.kind == LifecycleEventKind::AgeTick) return item;  // absorbing
    reject(item, ev);
  }
  AnnotationItem out = item;
  switch (ev.kind) {
    case LifecycleEventKind::Push:
      // Items come into existence via AnnotationItem::pushed; a second
      // push of a live item is a protocol error.
      reject(item, ev);
    case LifecycleEventKind::SaveAnnotation:
      if (item.state != S::QueuedUntouched) reject(item, ev);
      out.state = S::QueuedAnnotated;
      return out;
    case LifecycleEventKind::RecheckOk:
      if (item.state != S::QueuedAnnotated) reject(item, ev);
      out.state = S::Annotated;
      return out;
    case LifecycleEventKind::ThumbDown:
      if (!queued(item.state)) reject(item, ev);
      ++out.thumbs_down;
      if (item.state == S::QueuedUntouched && out.thumbs_down >= 3) {
        out.state = S::Dropped;
        out.dropped_at = ev.now;
      }
      return out;
    case LifecycleEventKind::MarkAnonymize:
      if (!queued(item.state)) reject(item, ev);
      out.anonymize = true;
      out.state = S::Dropped;
      out.dropped_at = ev.now;
      return out;
    case LifecycleEventKind::AgeTick: {
      const double day = 86400.0;
      if (item.state == S::Dropped && item.dropped_at &&
          static_cast<double>(ev.now - *item.dropped_at) >
              opts.dropped_purge_days * day) {
        out.state = S::Deleted;
      } else if (item.state == S::QueuedUntouched &&
                 static_cast<double>(ev.now - item.created_at) >
                     opts.stale_age_days * day) {
        out.state = S::Dropped;
        out.dropped_at = ev.now;
      }
      return out;  // AgeTick is always accepted, often a no-op
    }
    case LifecycleEventKind::Export:
      if (item.state != S::Annotated) reject(item, ev);
      out.state = S::Finished;
      return out;
    case LifecycleEventKind::Archive:
      if (item.state != S::Finished) reject(item, ev);
      out.state = S::Deleted;
      return out;
  }
  reject(item, ev);
}

}  // namespace atc2
