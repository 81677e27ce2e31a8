#include "sbcep/broker.hpp"

#include <algorithm>
#include <set>

#include "text_util.hpp"

namespace sbcep::broker {

void ClusterConfig::validate() const {
  if (broker_ids.empty()) throw UsageError("cluster needs at least one broker");
  std::set<std::string> seen;
  for (const auto& id : broker_ids) {
    if (id.empty()) throw UsageError("broker id must not be empty");
    if (!seen.insert(id).second) throw UsageError("duplicate broker id '" + id + "'");
  }
  if (replication_factor < 1 || replication_factor > broker_ids.size()) {
    throw UsageError("replication factor must be between 1 and the broker count");
  }
  if (default_partitions < 1) throw UsageError("a topic needs at least one partition");
}

Cluster::Cluster(ClusterConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const auto& id : config_.broker_ids) nodes_.push_back(Node{id, true, {}});
}

void Cluster::create_topic(const std::string& name, std::size_t partitions) {
  if (partitions == 0) partitions = config_.default_partitions;
  std::lock_guard lock(mutex_);
  if (topics_.count(name)) throw DataError("topic '" + name + "' already exists");
  Topic t;
  t.partitions = partitions;
  t.log_end.assign(partitions, 0);
  topics_.emplace(name, std::move(t));
}

bool Cluster::has_topic(std::string_view name) const {
  std::lock_guard lock(mutex_);
  return topics_.find(name) != topics_.end();
}

std::size_t Cluster::partitions(std::string_view name) const {
  std::lock_guard lock(mutex_);
  return topic(name).partitions;
}

Cluster::Node& Cluster::node(std::string_view id) {
  for (auto& n : nodes_) {
    if (n.id == id) return n;
  }
  throw DataError("unknown broker '" + std::string(id) + "'");
}

const Cluster::Node& Cluster::node(std::string_view id) const {
  return const_cast<Cluster*>(this)->node(id);
}

const Cluster::Topic& Cluster::topic(std::string_view name) const {
  auto it = topics_.find(name);
  if (it == topics_.end()) throw DataError("unknown topic '" + std::string(name) + "'");
  return it->second;
}

std::vector<Message>& Cluster::log_of(Node& n, const std::string& topic, std::size_t partition) {
  return n.logs[{topic, partition}];
}

const std::vector<Message>* Cluster::longest_live(const std::string& topic, std::size_t partition) const {
  const std::vector<Message>* best = nullptr;
  for (const auto& n : nodes_) {
    if (!n.alive) continue;
    auto it = n.logs.find({topic, partition});
    static const std::vector<Message> empty;
    const auto* log = it == n.logs.end() ? &empty : &it->second;
    if (!best || log->size() > best->size()) best = log;
  }
  return best;
}

bool Cluster::catch_up(Node& n, const std::string& name, std::size_t partition) {
  const std::uint64_t end = topic(name).log_end[partition];
  auto& log = log_of(n, name, partition);
  if (log.size() == end) return true;
  const auto* source = longest_live(name, partition);
  if (!source || source->size() != end) return false;
  log.insert(log.end(), source->begin() + static_cast<std::ptrdiff_t>(log.size()), source->end());
  return true;
}

Ack Cluster::publish(const std::string& name, std::string payload) {
  std::unique_lock lock(mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end()) throw DataError("unknown topic '" + name + "'");
  Topic& t = it->second;
  const std::size_t partition = t.next_partition % t.partitions;
  const std::uint64_t end = t.log_end[partition];

  std::vector<Node*> in_sync, lagging;
  for (auto& n : nodes_) {
    if (!n.alive) continue;
    (log_of(n, name, partition).size() == end ? in_sync : lagging).push_back(&n);
  }
  if (in_sync.size() + lagging.size() < config_.replication_factor) {
    throw Unavailable("publish rejected: " + std::to_string(in_sync.size() + lagging.size()) +
                      " live brokers, replication factor " + std::to_string(config_.replication_factor));
  }
  if (in_sync.empty()) {
    throw Unavailable("publish rejected: no live replica of " + name + "/" + std::to_string(partition) +
                      " is in sync");
  }
  std::vector<Node*> chosen(in_sync);
  chosen.insert(chosen.end(), lagging.begin(), lagging.end());
  chosen.resize(config_.replication_factor);

  ++clock_;
  Message msg{end, std::move(payload), clock_};
  // Catch up first: once one replica holds msg no source matches log end.
  for (Node* n : chosen) {
    if (!catch_up(*n, name, partition)) throw Unavailable("no in-sync source for " + name + "/" + std::to_string(partition));
  }
  for (Node* n : chosen) log_of(*n, name, partition).push_back(msg);
  t.log_end[partition] = end + 1;
  ++t.next_partition;
  ++acked_;
  lock.unlock();
  data_cv_.notify_all();
  return {partition, end};
}

std::vector<Message> Cluster::read(const std::string& name, std::size_t partition, const std::string& group,
                                   std::size_t max) {
  const Topic& t = topic(name);
  if (partition >= t.partitions) throw DataError("partition out of range for topic '" + name + "'");
  auto& committed = commits_[{group, name, partition}];
  const std::uint64_t end = t.log_end[partition];
  if (committed >= end || max == 0) return {};
  const auto* source = longest_live(name, partition);
  if (!source || source->size() <= committed) {
    throw Unavailable("partition " + name + "/" + std::to_string(partition) + " has no live replica");
  }
  const std::uint64_t stop = std::min<std::uint64_t>(source->size(), committed + max);
  std::vector<Message> out(source->begin() + static_cast<std::ptrdiff_t>(committed),
                           source->begin() + static_cast<std::ptrdiff_t>(stop));
  committed = stop;
  return out;
}

std::vector<Delivery> Cluster::consume(const std::string& name, const std::string& group, std::size_t max) {
  std::lock_guard lock(mutex_);
  const std::size_t parts = topic(name).partitions;
  std::vector<Delivery> out;
  for (std::size_t p = 0; p < parts && out.size() < max; ++p) {
    for (auto& m : read(name, p, group, max - out.size())) out.push_back({p, std::move(m)});
  }
  return out;
}

std::vector<Message> Cluster::consume_partition(const std::string& name, std::size_t partition,
                                                const std::string& group, std::size_t max) {
  std::lock_guard lock(mutex_);
  return read(name, partition, group, max);
}

bool Cluster::wait_for_data(const std::string& name, std::size_t partition, const std::string& group,
                            std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto ready = [&] {
    const Topic& t = topic(name);
    auto it = commits_.find({group, name, partition});
    const std::uint64_t c = it == commits_.end() ? 0 : it->second;
    return t.log_end.at(partition) > c;
  };
  return data_cv_.wait_for(lock, timeout, ready);
}

void Cluster::fail_broker(std::string_view id) {
  std::lock_guard lock(mutex_);
  node(id).alive = false;
}

void Cluster::recover_broker(std::string_view id) {
  {
    std::lock_guard lock(mutex_);
    Node& n = node(id);
    n.alive = true;
    for (const auto& [name, t] : topics_) {
      for (std::size_t p = 0; p < t.partitions; ++p) catch_up(n, name, p);
    }
  }
  data_cv_.notify_all();
}

void Cluster::flush_replication() {
  std::lock_guard lock(mutex_);
  for (auto& n : nodes_) {
    if (!n.alive) continue;
    for (const auto& [name, t] : topics_) {
      for (std::size_t p = 0; p < t.partitions; ++p) catch_up(n, name, p);
    }
  }
}

bool Cluster::alive(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return node(id).alive;
}

std::size_t Cluster::live_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.alive; }));
}

std::uint64_t Cluster::log_end(std::string_view name, std::size_t partition) const {
  std::lock_guard lock(mutex_);
  return topic(name).log_end.at(partition);
}

std::uint64_t Cluster::committed(std::string_view group, std::string_view name, std::size_t partition) const {
  std::lock_guard lock(mutex_);
  auto it = commits_.find({std::string(group), std::string(name), partition});
  return it == commits_.end() ? 0 : it->second;
}

std::vector<Message> Cluster::replica(std::string_view broker, std::string_view name, std::size_t partition) const {
  std::lock_guard lock(mutex_);
  const Node& n = node(broker);
  auto it = n.logs.find({std::string(name), partition});
  return it == n.logs.end() ? std::vector<Message>{} : it->second;
}

std::uint64_t Cluster::acknowledged() const {
  std::lock_guard lock(mutex_);
  return acked_;
}

std::vector<FaultAction> parse_fault_scenario(std::string_view text) {
  std::vector<FaultAction> out;
  std::uint64_t at = 0;
  std::size_t line_no = 0;
  for (auto raw : detail::lines(text)) {
    ++line_no;
    std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::vector<std::string> w;
    std::size_t pos = 0;
    while (pos < line.size()) {
      auto next = line.find_first_of(" \t", pos);
      if (next == std::string::npos) next = line.size();
      if (next > pos) w.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    auto fail = [&](const std::string& why) {
      throw DataError("scenario line " + std::to_string(line_no) + ": " + why);
    };
    std::size_t i = 0;
    if (detail::lower(w[0]) == "at") {
      if (w.size() < 2) fail("missing publish count after 'at'");
      auto n = detail::parse_int(w[1]);
      if (!n || *n < 0) fail("bad publish count '" + w[1] + "'");
      at = static_cast<std::uint64_t>(*n);
      i = 2;
    }
    if (w.size() != i + 2) fail("expected '<fail|recover> <broker>'");
    FaultAction a;
    a.at = at;
    const std::string verb = detail::lower(w[i]);
    if (verb == "fail") a.kind = FaultAction::Kind::Fail;
    else if (verb == "recover") a.kind = FaultAction::Kind::Recover;
    else fail("unknown action '" + w[i] + "'");
    a.broker = w[i + 1];
    if (!out.empty() && a.at < out.back().at) fail("publish counts must not decrease");
    out.push_back(std::move(a));
  }
  return out;
}

FaultInjector::FaultInjector(std::vector<FaultAction> actions) : actions_(std::move(actions)) {
  std::stable_sort(actions_.begin(), actions_.end(),
                   [](const FaultAction& a, const FaultAction& b) { return a.at < b.at; });
}

std::size_t FaultInjector::apply_due(Cluster& cluster, std::uint64_t published) {
  std::size_t applied = 0;
  while (next_ < actions_.size() && actions_[next_].at <= published) {
    const auto& a = actions_[next_++];
    if (a.kind == FaultAction::Kind::Fail) cluster.fail_broker(a.broker);
    else cluster.recover_broker(a.broker);
    ++applied;
  }
  return applied;
}

}  // namespace sbcep::broker
