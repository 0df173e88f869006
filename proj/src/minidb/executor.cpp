#include "bfa/minidb/executor.hpp"

#include "bfa/minidb/digest.hpp"

#include <array>
#include <chrono>
#include <memory>
#include <optional>

namespace bfa::minidb {

std::uint64_t key_hash(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<std::uint64_t>(*i);
  return fnv1a64(std::get<std::string>(v));
}

namespace {

struct ExecContext {
  const Database& db;
  const FlipContext& flips;
  std::int64_t work = 0;
};

class Operator {
public:
  virtual ~Operator() = default;
  virtual std::optional<Row> next() = 0;
};

using OperatorPtr = std::unique_ptr<Operator>;

OperatorPtr build(const PlanNode& node, ExecContext& ctx);

class SeqScan final : public Operator {
public:
  SeqScan(const Table& table, ExecContext& ctx) : table_(table), ctx_(ctx) {}

  std::optional<Row> next() override {
    if (pos_ >= table_.rows.size()) return std::nullopt;
    ++ctx_.work;
    return table_.rows[pos_++];
  }

private:
  const Table& table_;
  ExecContext& ctx_;
  std::size_t pos_ = 0;
};

class Filter final : public Operator {
public:
  Filter(const PlanNode& node, OperatorPtr child, ExecContext& ctx)
      : node_(node), child_(std::move(child)), ctx_(ctx) {}

  std::optional<Row> next() override {
    while (auto row = child_->next()) {
      bool pass = true;
      for (const auto& p : node_.predicates) {
        ++ctx_.work;
        if (!p.eval(*row)) {
          pass = false;
          break;
        }
      }
      if (pass) return row;
    }
    return std::nullopt;
  }

private:
  const PlanNode& node_;
  OperatorPtr child_;
  ExecContext& ctx_;
};

Row concat(const Row& left, const Row& right) {
  Row out;
  out.reserve(left.size() + right.size());
  out.insert(out.end(), left.begin(), left.end());
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

// Pulls its first outer row before materializing the inner input.
class NestedLoopJoin final : public Operator {
public:
  NestedLoopJoin(const PlanNode& node, OperatorPtr left, OperatorPtr right, ExecContext& ctx)
      : node_(node), left_(std::move(left)), right_(std::move(right)), ctx_(ctx) {}

  std::optional<Row> next() override {
    const auto lk = static_cast<std::size_t>(node_.left_key.index);
    const auto rk = static_cast<std::size_t>(node_.right_key.index);
    while (!done_) {
      if (!outer_) {
        outer_ = left_->next();
        if (!outer_) {
          done_ = true;
          break;
        }
        if (!materialized_) {
          while (auto r = right_->next()) inner_.push_back(std::move(*r));
          materialized_ = true;
          if (inner_.empty()) {
            done_ = true;
            break;
          }
        }
        pos_ = 0;
      }
      while (pos_ < inner_.size()) {
        const Row& inner = inner_[pos_++];
        ++ctx_.work;
        if ((*outer_)[lk] == inner[rk]) return concat(*outer_, inner);
      }
      outer_.reset();
    }
    return std::nullopt;
  }

private:
  const PlanNode& node_;
  OperatorPtr left_;
  OperatorPtr right_;
  ExecContext& ctx_;
  std::vector<Row> inner_;
  std::optional<Row> outer_;
  std::size_t pos_ = 0;
  bool materialized_ = false;
  bool done_ = false;
};

// Reads the left input first: with build=left the whole build side, with
// build=right the first probe row.
class HashJoin final : public Operator {
public:
  HashJoin(const PlanNode& node, OperatorPtr left, OperatorPtr right, ExecContext& ctx)
      : node_(node), left_(std::move(left)), right_(std::move(right)), ctx_(ctx) {}

  std::optional<Row> next() override {
    if (!started_) start();
    auto& probe_input = node_.build_left ? right_ : left_;
    const auto probe_key = static_cast<std::size_t>(node_.build_left ? node_.right_key.index : node_.left_key.index);
    const auto build_key = static_cast<std::size_t>(node_.build_left ? node_.left_key.index : node_.right_key.index);
    while (!done_) {
      if (!probe_) {
        probe_ = probe_input->next();
        if (!probe_) {
          done_ = true;
          break;
        }
        bucket_ = &buckets_[key_hash((*probe_)[probe_key]) % kHashBuckets];
        pos_ = 0;
      }
      while (pos_ < bucket_->size()) {
        const Row& entry = build_rows_[(*bucket_)[pos_++]];
        ++ctx_.work;
        if (ctx_.flips.point(flip_ids::kHashRecheck, true)) {
          if (entry[build_key] != (*probe_)[probe_key]) continue;
        }
        return node_.build_left ? concat(entry, *probe_) : concat(*probe_, entry);
      }
      probe_.reset();
    }
    return std::nullopt;
  }

private:
  void start() {
    started_ = true;
    if (!node_.build_left) {
      probe_ = left_->next();
      if (!probe_) {
        done_ = true;
        return;
      }
    }
    auto& build_input = node_.build_left ? left_ : right_;
    const auto key = static_cast<std::size_t>(node_.build_left ? node_.left_key.index : node_.right_key.index);
    while (auto r = build_input->next()) {
      ++ctx_.work;
      buckets_[key_hash((*r)[key]) % kHashBuckets].push_back(build_rows_.size());
      build_rows_.push_back(std::move(*r));
    }
    if (build_rows_.empty()) {
      done_ = true;
      return;
    }
    if (probe_) {
      const auto probe_key = static_cast<std::size_t>(node_.left_key.index);
      bucket_ = &buckets_[key_hash((*probe_)[probe_key]) % kHashBuckets];
      pos_ = 0;
    }
  }

  const PlanNode& node_;
  OperatorPtr left_;
  OperatorPtr right_;
  ExecContext& ctx_;
  std::vector<Row> build_rows_;
  std::array<std::vector<std::size_t>, kHashBuckets> buckets_;
  std::optional<Row> probe_;
  const std::vector<std::size_t>* bucket_ = nullptr;
  std::size_t pos_ = 0;
  bool started_ = false;
  bool done_ = false;
};

class Project final : public Operator {
public:
  Project(const PlanNode& node, OperatorPtr child) : node_(node), child_(std::move(child)) {}

  std::optional<Row> next() override {
    auto row = child_->next();
    if (!row || node_.star) return row;
    Row out;
    out.reserve(node_.projections.size());
    for (const auto& p : node_.projections) out.push_back((*row)[static_cast<std::size_t>(p.index)]);
    return out;
  }

private:
  const PlanNode& node_;
  OperatorPtr child_;
};

class Limit final : public Operator {
public:
  Limit(const PlanNode& node, OperatorPtr child) : node_(node), child_(std::move(child)) {}

  std::optional<Row> next() override {
    if (node_.early_stop) {
      if (produced_ >= node_.limit) return std::nullopt;
      auto row = child_->next();
      if (row) ++produced_;
      return row;
    }
    while (auto row = child_->next()) {
      if (produced_ < node_.limit) {
        ++produced_;
        return row;
      }
    }
    return std::nullopt;
  }

private:
  const PlanNode& node_;
  OperatorPtr child_;
  std::int64_t produced_ = 0;
};

OperatorPtr build(const PlanNode& node, ExecContext& ctx) {
  switch (node.kind) {
  case NodeKind::SeqScan: {
    const auto* t = ctx.db.find(node.table);
    if (!t) throw PlanError("table '" + node.table + "' missing at execution");
    return std::make_unique<SeqScan>(*t, ctx);
  }
  case NodeKind::Filter: return std::make_unique<Filter>(node, build(node.children.at(0), ctx), ctx);
  case NodeKind::NestedLoopJoin:
    return std::make_unique<NestedLoopJoin>(node, build(node.children.at(0), ctx), build(node.children.at(1), ctx),
                                            ctx);
  case NodeKind::HashJoin:
    return std::make_unique<HashJoin>(node, build(node.children.at(0), ctx), build(node.children.at(1), ctx), ctx);
  case NodeKind::Project: return std::make_unique<Project>(node, build(node.children.at(0), ctx));
  case NodeKind::Limit: return std::make_unique<Limit>(node, build(node.children.at(0), ctx));
  }
  throw PlanError("unknown plan node");
}

} // namespace

ExecResult execute_plan(const Plan& plan, const Database& db, const FlipContext& flips) {
  auto started = std::chrono::steady_clock::now();
  ExecContext ctx{db, flips};
  auto root = build(plan.root, ctx);
  ExecResult result;
  while (auto row = root->next()) {
    ++ctx.work;
    result.rows.push_back(std::move(*row));
  }
  result.stats.work_units = ctx.work;
  result.stats.rows_out = static_cast<std::int64_t>(result.rows.size());
  result.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

} // namespace bfa::minidb
