#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "sbcep/error.hpp"

namespace sbcep::broker {

// Raised when a publish cannot reach enough live replicas or a partition has
// no live replica holding the requested data.
class Unavailable : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

struct Message {
  std::uint64_t offset = 0;
  std::string payload;
  std::uint64_t publish_time = 0;  // cluster logical clock

  bool operator==(const Message&) const = default;
};

struct Delivery {
  std::size_t partition = 0;
  Message message;
};

struct Ack {
  std::size_t partition = 0;
  std::uint64_t offset = 0;
};

struct ClusterConfig {
  std::vector<std::string> broker_ids{"A", "B", "C"};
  std::size_t replication_factor = 2;
  std::size_t default_partitions = 1;

  void validate() const;
};

// In-process replicated log. Every broker keeps its own replica of each
// partition; a publish is acknowledged only after the message sits at the
// same offset on replication_factor live brokers. All operations are
// linearizable under one cluster lock.
class Cluster {
 public:
  explicit Cluster(ClusterConfig config = {});

  void create_topic(const std::string& topic, std::size_t partitions = 0);  // 0 = default
  bool has_topic(std::string_view topic) const;
  std::size_t partitions(std::string_view topic) const;

  // Partition chosen round-robin per topic.
  Ack publish(const std::string& topic, std::string payload);

  // Messages after the group's committed offsets, in offset order per
  // partition, partitions visited in index order. Commits on return.
  std::vector<Delivery> consume(const std::string& topic, const std::string& group, std::size_t max);
  std::vector<Message> consume_partition(const std::string& topic, std::size_t partition,
                                         const std::string& group, std::size_t max);

  // Blocks until the partition has data past the group's offset, or timeout.
  bool wait_for_data(const std::string& topic, std::size_t partition, const std::string& group,
                     std::chrono::milliseconds timeout) const;

  void fail_broker(std::string_view id);
  // Copies every partition's missing suffix from an in-sync live replica.
  void recover_broker(std::string_view id);
  bool alive(std::string_view id) const;
  std::size_t live_count() const;
  const std::vector<std::string>& broker_ids() const { return config_.broker_ids; }
  std::size_t replication_factor() const { return config_.replication_factor; }

  std::uint64_t log_end(std::string_view topic, std::size_t partition) const;
  std::uint64_t committed(std::string_view group, std::string_view topic, std::size_t partition) const;
  // Copy of a broker's replica, for inspection.
  std::vector<Message> replica(std::string_view broker, std::string_view topic, std::size_t partition) const;
  std::uint64_t acknowledged() const;

  // Brings every live replica up to log end where a source exists.
  void flush_replication();

 private:
  struct Node {
    std::string id;
    bool alive = true;
    std::map<std::pair<std::string, std::size_t>, std::vector<Message>> logs;
  };
  struct Topic {
    std::size_t partitions = 1;
    std::vector<std::uint64_t> log_end;
    std::size_t next_partition = 0;
  };

  Node& node(std::string_view id);
  const Node& node(std::string_view id) const;
  const Topic& topic(std::string_view name) const;
  std::vector<Message>& log_of(Node& n, const std::string& topic, std::size_t partition);
  const std::vector<Message>* longest_live(const std::string& topic, std::size_t partition) const;
  bool catch_up(Node& n, const std::string& topic, std::size_t partition);
  std::vector<Message> read(const std::string& topic, std::size_t partition, const std::string& group,
                            std::size_t max);

  ClusterConfig config_;
  std::vector<Node> nodes_;
  std::map<std::string, Topic, std::less<>> topics_;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::uint64_t> commits_;
  std::uint64_t clock_ = 0;
  std::uint64_t acked_ = 0;
  mutable std::mutex mutex_;
  mutable std::condition_variable data_cv_;
};

// Fault scenario: one action per line, `at <n> fail <id>` or `at <n> recover <id>`.
// A line without `at <n>` reuses the previous line's n. Actions at n run once
// n publishes have been acknowledged. '#' starts a comment.
struct FaultAction {
  enum class Kind { Fail, Recover };
  std::uint64_t at = 0;
  Kind kind = Kind::Fail;
  std::string broker;

  bool operator==(const FaultAction&) const = default;
};

std::vector<FaultAction> parse_fault_scenario(std::string_view text);

// Applies scenario actions as the publish count advances.
class FaultInjector {
 public:
  explicit FaultInjector(std::vector<FaultAction> actions);
  // Runs every pending action whose trigger is <= published.
  std::size_t apply_due(Cluster& cluster, std::uint64_t published);
  bool done() const { return next_ == actions_.size(); }

 private:
  std::vector<FaultAction> actions_;
  std::size_t next_ = 0;
};

}  // namespace sbcep::broker
