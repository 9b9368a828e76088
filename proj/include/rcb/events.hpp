#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcb {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xFFFFFFFFu;

enum class EventKind { kClaim, kJoin, kRepair, kFallback, kLeave, kMine, kVerify, kReencode };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kClaim: return "claim";
    case EventKind::kJoin: return "join";
    case EventKind::kRepair: return "repair";
    case EventKind::kFallback: return "fallback";
    case EventKind::kLeave: return "leave";
    case EventKind::kMine: return "mine";
    case EventKind::kVerify: return "verify";
    case EventKind::kReencode: return "reencode";
  }
  return "unknown";
}

inline EventKind parse_event_kind(const std::string& s) {
  for (EventKind k : {EventKind::kClaim, EventKind::kJoin, EventKind::kRepair, EventKind::kFallback, EventKind::kLeave,
                      EventKind::kMine, EventKind::kVerify, EventKind::kReencode}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

/// One protocol event. Join rows with group 0 are pool copies; join rows
/// with a group carry the total coded-block transfer for that group, and the
/// repair/fallback rows of the same join break that total down.
struct Event {
  std::uint64_t epoch = 0;
  EventKind kind = EventKind::kJoin;
  NodeId node = kNoNode;
  std::uint32_t group = 0;
  std::uint64_t blocks = 0;
  std::uint64_t bytes = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

inline constexpr const char* kEventCsvHeader = "epoch,kind,node,group,blocks,bytes";

inline void write_csv_row(std::ostream& os, const Event& e) {
  os << e.epoch << ',' << to_string(e.kind) << ',';
  if (e.node == kNoNode) {
    os << -1;
  } else {
    os << e.node;
  }
  os << ',' << e.group << ',' << e.blocks << ',' << e.bytes << '\n';
}

class EventLog {
 public:
  void record(const Event& e) { events_.push_back(e); }
  const std::vector<Event>& events() const { return events_; }
  std::size_t count(EventKind k) const {
    std::size_t c = 0;
    for (const Event& e : events_)
      if (e.kind == k) ++c;
    return c;
  }
  void clear() { events_.clear(); }

 private:
  std::vector<Event> events_;
};

}  // namespace rcb
