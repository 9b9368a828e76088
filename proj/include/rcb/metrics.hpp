#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcb/events.hpp"

namespace rcb {

/// R_s = (W - sum_k + |M|) / W
inline double storage_reduction(std::uint64_t W, std::uint64_t sum_k, std::uint64_t groups) {
  if (W == 0) throw std::domain_error("storage_reduction: empty chain");
  if (sum_k > W) throw std::domain_error("storage_reduction: encoded blocks exceed chain length");
  return static_cast<double>(W - sum_k + groups) / static_cast<double>(W);
}

struct EpochRecord {
  std::uint64_t epoch = 0;
  std::uint64_t nodes = 0;
  std::uint64_t W = 0;
  std::uint64_t sum_k = 0;
  std::uint64_t groups = 0;
  double R_s = 1.0;
  std::uint64_t comm_coded_bytes = 0;  // mean per joining node this epoch
  std::uint64_t comm_pool_bytes = 0;   // mean per joining node this epoch
  std::uint64_t joins = 0;
  std::uint64_t fallbacks = 0;
  std::uint64_t groups_lost = 0;
};

inline constexpr const char* kMetricsCsvHeader =
    "epoch,nodes,W,sum_k,groups,R_s,comm_coded_bytes,comm_pool_bytes,joins,fallbacks,groups_lost";

class MetricsLedger {
 public:
  void append(const EpochRecord& r) {
    if (r.sum_k > r.W) throw std::logic_error("metrics: sum_k exceeds W");
    records_.push_back(r);
  }
  const std::vector<EpochRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  const EpochRecord& back() const { return records_.back(); }

  void write_csv(std::ostream& os) const {
    os << kMetricsCsvHeader << '\n';
    for (const auto& r : records_) {
      char rs[32];
      std::snprintf(rs, sizeof rs, "%.8f", r.R_s);
      os << r.epoch << ',' << r.nodes << ',' << r.W << ',' << r.sum_k << ',' << r.groups << ',' << rs << ','
         << r.comm_coded_bytes << ',' << r.comm_pool_bytes << ',' << r.joins << ',' << r.fallbacks << ','
         << r.groups_lost << '\n';
    }
  }

  static MetricsLedger read_csv(std::istream& is) {
    MetricsLedger m;
    std::string line;
    if (!std::getline(is, line) || line != kMetricsCsvHeader) throw std::runtime_error("metrics csv: unexpected header");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string f;
      std::vector<std::string> v;
      while (std::getline(ls, f, ',')) v.push_back(f);
      if (v.size() != 11) throw std::runtime_error("metrics csv: malformed row");
      EpochRecord r;
      r.epoch = std::stoull(v[0]);
      r.nodes = std::stoull(v[1]);
      r.W = std::stoull(v[2]);
      r.sum_k = std::stoull(v[3]);
      r.groups = std::stoull(v[4]);
      r.R_s = std::stod(v[5]);
      r.comm_coded_bytes = std::stoull(v[6]);
      r.comm_pool_bytes = std::stoull(v[7]);
      r.joins = std::stoull(v[8]);
      r.fallbacks = std::stoull(v[9]);
      r.groups_lost = std::stoull(v[10]);
      m.append(r);
    }
    return m;
  }

 private:
  std::vector<EpochRecord> records_;
};

/// Traffic of one joining node, summed over its groups.
struct JoinTraffic {
  std::uint64_t epoch = 0;
  NodeId node = kNoNode;
  std::uint64_t coded_bytes = 0;
  std::uint64_t pool_bytes = 0;
  std::uint64_t W = 0;

  std::uint64_t total_bytes() const { return coded_bytes + pool_bytes; }
};

struct CdfPoint {
  std::uint64_t blocks = 0;
  std::uint64_t count = 0;
  double cdf = 0.0;
};

struct CommunicationSummary {
  std::vector<JoinTraffic> joins;
  std::map<std::uint64_t, double> mean_coded_bytes;  // by epoch
  std::map<std::uint64_t, double> mean_pool_bytes;   // by epoch
  std::map<std::uint64_t, double> reduction;         // by epoch: mean (coded + pool) / (W * block bytes)
  std::vector<CdfPoint> cdf;                         // coded blocks per group join
  std::uint64_t group_joins = 0;

  double cdf_at(std::uint64_t blocks) const {
    double v = 0.0;
    for (const auto& p : cdf) {
      if (p.blocks > blocks) break;
      v = p.cdf;
    }
    return v;
  }
};

/// Empirical CDF of coded blocks transferred per group join.
inline std::vector<CdfPoint> join_cdf(const std::vector<Event>& events) {
  std::map<std::uint64_t, std::uint64_t> hist;
  std::uint64_t total = 0;
  for (const Event& e : events) {
    if (e.kind != EventKind::kJoin || e.group == 0) continue;
    ++hist[e.blocks];
    ++total;
  }
  std::vector<CdfPoint> out;
  std::uint64_t acc = 0;
  for (const auto& [b, c] : hist) {
    acc += c;
    out.push_back({b, c, static_cast<double>(acc) / static_cast<double>(total)});
  }
  return out;
}

/// Per-join coded-group and pool-copy traffic from the event log. `W_by_epoch`
/// gives the chain length seen by joins of that epoch.
inline CommunicationSummary communication_metrics(const std::vector<Event>& events,
                                                  const std::map<std::uint64_t, std::uint64_t>& W_by_epoch,
                                                  std::uint64_t block_bytes) {
  CommunicationSummary s;
  std::map<std::pair<std::uint64_t, NodeId>, std::size_t> index;
  for (const Event& e : events) {
    if (e.kind != EventKind::kJoin) continue;
    const auto key = std::make_pair(e.epoch, e.node);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, s.joins.size()).first;
      JoinTraffic t;
      t.epoch = e.epoch;
      t.node = e.node;
      auto w = W_by_epoch.find(e.epoch);
      t.W = w == W_by_epoch.end() ? 0 : w->second;
      s.joins.push_back(t);
    }
    JoinTraffic& t = s.joins[it->second];
    if (e.group == 0) {
      t.pool_bytes += e.bytes;
    } else {
      t.coded_bytes += e.bytes;
      ++s.group_joins;
    }
  }
  std::map<std::uint64_t, std::uint64_t> per_epoch;
  for (const JoinTraffic& t : s.joins) {
    ++per_epoch[t.epoch];
    s.mean_coded_bytes[t.epoch] += static_cast<double>(t.coded_bytes);
    s.mean_pool_bytes[t.epoch] += static_cast<double>(t.pool_bytes);
    if (t.W > 0 && block_bytes > 0) {
      s.reduction[t.epoch] += static_cast<double>(t.total_bytes()) / (static_cast<double>(t.W) * block_bytes);
    }
  }
  for (const auto& [ep, c] : per_epoch) {
    s.mean_coded_bytes[ep] /= static_cast<double>(c);
    s.mean_pool_bytes[ep] /= static_cast<double>(c);
    if (s.reduction.count(ep)) s.reduction[ep] /= static_cast<double>(c);
  }
  s.cdf = join_cdf(events);
  return s;
}

inline std::vector<Event> read_events_csv(std::istream& is) {
  std::vector<Event> out;
  std::string line;
  if (!std::getline(is, line) || line != kEventCsvHeader) throw std::runtime_error("events csv: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f;
    std::vector<std::string> v;
    while (std::getline(ls, f, ',')) v.push_back(f);
    if (v.size() != 6) throw std::runtime_error("events csv: malformed row");
    Event e;
    e.epoch = std::stoull(v[0]);
    e.kind = parse_event_kind(v[1]);
    const long long node = std::stoll(v[2]);
    e.node = node < 0 ? kNoNode : static_cast<NodeId>(node);
    e.group = static_cast<std::uint32_t>(std::stoul(v[3]));
    e.blocks = std::stoull(v[4]);
    e.bytes = std::stoull(v[5]);
    out.push_back(e);
  }
  return out;
}

}  // namespace rcb
