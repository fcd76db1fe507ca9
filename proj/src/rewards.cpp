#include "subrl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "subrl/errors.hpp"

namespace subrl {

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::weighted_coverage: return "weighted_coverage";
    case RewardKind::item_collection: return "item_collection";
    case RewardKind::gp_mutual_information: return "gp_mutual_information";
    case RewardKind::modular: return "modular";
    case RewardKind::modularized_wrapper: return "modularized_wrapper";
    case RewardKind::custom: return "custom";
  }
  return "unknown";
}

double RewardFunction::singleton(TimedState s) const {
  check_range(s.v);
  return evaluate(VisitedSet::from_pairs({s}));
}

void RewardFunction::check_range(StateId v) const {
  if (v < 0 || v >= num_states())
    throw InputError("state " + std::to_string(v) + " outside ground set of size " + std::to_string(num_states()));
}

void RewardFunction::check_range(const VisitedSet& set) const {
  for (const auto& p : set.pairs) check_range(p.v);
}

// ---------------------------------------------------------------------------
// Weighted coverage

class WeightedCoverage::Evaluator final : public IncrementalEvaluator {
 public:
  explicit Evaluator(const WeightedCoverage& f) : f_(&f), covered_(f.weights_.size(), 0) {}

  double gain(TimedState s) const override {
    double g = 0.0;
    for (int c : f_->footprint(s.v))
      if (!covered_[static_cast<std::size_t>(c)]) g += f_->weights_[static_cast<std::size_t>(c)];
    return g;
  }

  double add(TimedState s) override {
    double g = 0.0;
    for (int c : f_->footprint(s.v)) {
      auto& flag = covered_[static_cast<std::size_t>(c)];
      if (!flag) {
        flag = 1;
        g += f_->weights_[static_cast<std::size_t>(c)];
      }
    }
    value_ += g;
    return g;
  }

  double value() const override { return value_; }
  std::unique_ptr<IncrementalEvaluator> clone() const override { return std::make_unique<Evaluator>(*this); }

 private:
  const WeightedCoverage* f_;
  std::vector<char> covered_;
  double value_ = 0.0;
};

WeightedCoverage::WeightedCoverage(std::vector<double> cell_weights, std::vector<std::vector<int>> footprints)
    : weights_(std::move(cell_weights)), footprints_(std::move(footprints)) {
  for (double w : weights_)
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("coverage weights must be finite and nonnegative");
  for (auto& fp : footprints_) {
    std::sort(fp.begin(), fp.end());
    fp.erase(std::unique(fp.begin(), fp.end()), fp.end());
    for (int c : fp)
      if (c < 0 || c >= static_cast<int>(weights_.size())) throw ConfigError("footprint cell out of range");
  }
}

std::shared_ptr<WeightedCoverage> WeightedCoverage::on_grid(int width, int height, std::span<const double> density,
                                                            int radius) {
  if (width <= 0 || height <= 0) throw ConfigError("coverage grid must be nonempty");
  if (radius < 0) throw ConfigError("footprint radius must be nonnegative");
  if (static_cast<int>(density.size()) != width * height) throw ConfigError("density does not match grid size");
  std::vector<std::vector<int>> footprints(static_cast<std::size_t>(width * height));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      auto& fp = footprints[static_cast<std::size_t>(y * width + x)];
      for (int yy = std::max(0, y - radius); yy <= std::min(height - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(width - 1, x + radius); ++xx)
          fp.push_back(yy * width + xx);
    }
  return std::make_shared<WeightedCoverage>(std::vector<double>(density.begin(), density.end()),
                                            std::move(footprints));
}

double WeightedCoverage::evaluate(const VisitedSet& set) const {
  check_range(set);
  std::vector<char> covered(weights_.size(), 0);
  for (StateId v : set.projected)
    for (int c : footprint(v)) covered[static_cast<std::size_t>(c)] = 1;
  double total = 0.0;
  for (std::size_t c = 0; c < covered.size(); ++c)
    if (covered[c]) total += weights_[c];
  return total;
}

std::unique_ptr<IncrementalEvaluator> WeightedCoverage::make_evaluator() const {
  return std::make_unique<Evaluator>(*this);
}

// ---------------------------------------------------------------------------
// Item collection

class ItemCollection::Evaluator final : public IncrementalEvaluator {
 public:
  explicit Evaluator(const ItemCollection& f)
      : f_(&f), seen_(static_cast<std::size_t>(f.num_states_), 0), count_(f.groups_.size(), 0) {}

  double gain(TimedState s) const override {
    const int g = f_->group_of_[static_cast<std::size_t>(s.v)];
    if (g < 0 || seen_[static_cast<std::size_t>(s.v)]) return 0.0;
    return count_[static_cast<std::size_t>(g)] < f_->quotas_[static_cast<std::size_t>(g)] ? 1.0 : 0.0;
  }

  double add(TimedState s) override {
    const double g = gain(s);
    if (!seen_[static_cast<std::size_t>(s.v)]) {
      seen_[static_cast<std::size_t>(s.v)] = 1;
      const int grp = f_->group_of_[static_cast<std::size_t>(s.v)];
      if (grp >= 0) ++count_[static_cast<std::size_t>(grp)];
    }
    value_ += g;
    return g;
  }

  double value() const override { return value_; }
  std::unique_ptr<IncrementalEvaluator> clone() const override { return std::make_unique<Evaluator>(*this); }

 private:
  const ItemCollection* f_;
  std::vector<char> seen_;
  std::vector<int> count_;
  double value_ = 0.0;
};

ItemCollection::ItemCollection(int num_states, std::vector<std::vector<StateId>> groups, std::vector<int> quotas)
    : num_states_(num_states),
      groups_(std::move(groups)),
      quotas_(std::move(quotas)),
      group_of_(static_cast<std::size_t>(std::max(num_states, 0)), -1) {
  if (num_states_ <= 0) throw ConfigError("item collection needs a nonempty ground set");
  if (groups_.size() != quotas_.size()) throw ConfigError("need one quota per item group");
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto& grp = groups_[g];
    std::sort(grp.begin(), grp.end());
    if (std::adjacent_find(grp.begin(), grp.end()) != grp.end()) throw ConfigError("item group lists a state twice");
    if (quotas_[g] < 1 || quotas_[g] > static_cast<int>(grp.size()))
      throw ConfigError("quota of group " + std::to_string(g) + " must be in [1, |g_i|]");
    for (StateId v : grp) {
      if (v < 0 || v >= num_states_) throw ConfigError("item state out of range");
      auto& owner = group_of_[static_cast<std::size_t>(v)];
      if (owner >= 0) throw ConfigError("item groups must be disjoint");
      owner = static_cast<int>(g);
    }
  }
}

double ItemCollection::evaluate(const VisitedSet& set) const {
  check_range(set);
  std::vector<int> count(groups_.size(), 0);
  for (StateId v : set.projected) {
    const int g = group_of_[static_cast<std::size_t>(v)];
    if (g >= 0) ++count[static_cast<std::size_t>(g)];
  }
  double total = 0.0;
  for (std::size_t g = 0; g < count.size(); ++g) total += std::min(count[g], quotas_[g]);
  return total;
}

std::unique_ptr<IncrementalEvaluator> ItemCollection::make_evaluator() const {
  return std::make_unique<Evaluator>(*this);
}

// ---------------------------------------------------------------------------
// GP mutual information

class GpMutualInformation::Evaluator final : public IncrementalEvaluator {
 public:
  explicit Evaluator(const GpMutualInformation& f)
      : seen_(f.params_.points.size(), 0), chol_(f.params_) {}

  double gain(TimedState s) const override {
    if (seen_[static_cast<std::size_t>(s.v)]) return 0.0;
    return chol_.gain(s.v);
  }

  double add(TimedState s) override {
    if (seen_[static_cast<std::size_t>(s.v)]) return 0.0;
    seen_[static_cast<std::size_t>(s.v)] = 1;
    return chol_.add(s.v);
  }

  double value() const override { return chol_.value(); }
  std::unique_ptr<IncrementalEvaluator> clone() const override { return std::make_unique<Evaluator>(*this); }

 private:
  std::vector<char> seen_;
  gp::CholState chol_;
};

GpMutualInformation::GpMutualInformation(gp::GpParams params) : params_(std::move(params)) {
  params_.validate();
  if (params_.points.empty()) throw ConfigError("GP reward needs at least one point");
}

double GpMutualInformation::evaluate(const VisitedSet& set) const {
  check_range(set);
  std::vector<int> ids(set.projected.begin(), set.projected.end());
  return gp::mutual_information(params_, ids);
}

std::unique_ptr<IncrementalEvaluator> GpMutualInformation::make_evaluator() const {
  return std::make_unique<Evaluator>(*this);
}

// ---------------------------------------------------------------------------
// Modular

class ModularReward::Evaluator final : public IncrementalEvaluator {
 public:
  explicit Evaluator(const ModularReward& f) : f_(&f) {}

  double gain(TimedState s) const override { return seen_.contains(key(s)) ? 0.0 : f_->reward(s); }

  double add(TimedState s) override {
    if (!seen_.insert(key(s)).second) return 0.0;
    const double g = f_->reward(s);
    value_ += g;
    return g;
  }

  double value() const override { return value_; }
  std::unique_ptr<IncrementalEvaluator> clone() const override { return std::make_unique<Evaluator>(*this); }

 private:
  std::int64_t key(TimedState s) const {
    return static_cast<std::int64_t>(s.h) * f_->num_states() + s.v;
  }

  const ModularReward* f_;
  std::unordered_set<std::int64_t> seen_;
  double value_ = 0.0;
};

ModularReward::ModularReward(std::vector<double> state_reward, double discount)
    : reward_(std::move(state_reward)), discount_(discount) {
  if (reward_.empty()) throw ConfigError("modular reward needs a nonempty ground set");
  for (double r : reward_)
    if (!std::isfinite(r)) throw ConfigError("modular rewards must be finite");
  if (!(discount_ >= 0.0 && discount_ <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
}

double ModularReward::reward(TimedState s) const {
  const double r = reward_[static_cast<std::size_t>(s.v)];
  return discount_ == 1.0 ? r : std::pow(discount_, s.h) * r;
}

double ModularReward::evaluate(const VisitedSet& set) const {
  check_range(set);
  double total = 0.0;
  for (const auto& p : set.pairs) total += reward(p);
  return total;
}

std::unique_ptr<IncrementalEvaluator> ModularReward::make_evaluator() const {
  return std::make_unique<Evaluator>(*this);
}

// ---------------------------------------------------------------------------
// Generic set function

class SetFunctionReward::Evaluator final : public IncrementalEvaluator {
 public:
  explicit Evaluator(const SetFunctionReward& f) : f_(&f) {}

  double gain(TimedState s) const override {
    if (std::binary_search(members_.begin(), members_.end(), s.v)) return 0.0;
    auto grown = members_;
    grown.insert(std::lower_bound(grown.begin(), grown.end(), s.v), s.v);
    return f_->fn_(grown) - value_;
  }

  double add(TimedState s) override {
    if (std::binary_search(members_.begin(), members_.end(), s.v)) return 0.0;
    members_.insert(std::lower_bound(members_.begin(), members_.end(), s.v), s.v);
    const double next = f_->fn_(members_);
    const double g = next - value_;
    value_ = next;
    return g;
  }

  double value() const override { return value_; }
  std::unique_ptr<IncrementalEvaluator> clone() const override { return std::make_unique<Evaluator>(*this); }

 private:
  const SetFunctionReward* f_;
  std::vector<StateId> members_;
  double value_ = 0.0;
};

SetFunctionReward::SetFunctionReward(int num_states, Fn fn) : num_states_(num_states), fn_(std::move(fn)) {
  if (num_states_ <= 0) throw ConfigError("set function needs a nonempty ground set");
}

double SetFunctionReward::evaluate(const VisitedSet& set) const {
  check_range(set);
  return fn_(set.projected);
}

std::unique_ptr<IncrementalEvaluator> SetFunctionReward::make_evaluator() const {
  return std::make_unique<Evaluator>(*this);
}

// ---------------------------------------------------------------------------

std::shared_ptr<const ModularReward> modularize(const RewardPtr& reward) {
  if (auto modular = std::dynamic_pointer_cast<const ModularReward>(reward)) return modular;
  std::vector<double> r(static_cast<std::size_t>(reward->num_states()));
  for (StateId v = 0; v < reward->num_states(); ++v) r[static_cast<std::size_t>(v)] = reward->singleton({0, v});
  return std::make_shared<ModularizedReward>(std::move(r), reward->kind());
}

}  // namespace subrl
