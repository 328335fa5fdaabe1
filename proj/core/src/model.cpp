#include "riskmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace riskmdp {

namespace {

void require_unique(const std::vector<std::string>& labels, const char* what) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      throw ModelError(std::string("duplicate ") + what + " label '" + l + "'");
    }
  }
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

MdpModel::MdpModel(std::vector<std::string> state_labels, std::vector<std::string> action_labels,
                   std::vector<Eigen::MatrixXd> kernels, Eigen::MatrixXd costs)
    : state_labels_(std::move(state_labels)),
      action_labels_(std::move(action_labels)),
      kernels_(std::move(kernels)),
      costs_(std::move(costs)) {
  const auto s = static_cast<Eigen::Index>(state_labels_.size());
  const auto a = static_cast<Eigen::Index>(action_labels_.size());
  if (s < 1) throw ModelError("model needs at least one state");
  if (a < 1) throw ModelError("model needs at least one action");
  require_unique(state_labels_, "state");
  require_unique(action_labels_, "action");
  if (static_cast<Eigen::Index>(kernels_.size()) != a) {
    throw ModelError("expected " + std::to_string(a) + " transition matrices, got " +
                     std::to_string(kernels_.size()));
  }
  if (costs_.rows() != s || costs_.cols() != a) {
    throw ModelError("cost matrix must be " + std::to_string(s) + "x" + std::to_string(a));
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index u = 0; u < a; ++u) {
      if (!std::isfinite(costs_(i, u))) {
        throw ModelError("non-finite cost at state '" + state_labels_[i] + "', action '" +
                         action_labels_[u] + "'");
      }
    }
  }

  allowed_ = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(s, s, false);
  for (Eigen::Index u = 0; u < a; ++u) {
    const auto& k = kernels_[u];
    if (k.rows() != s || k.cols() != s) {
      throw ModelError("transition matrix for action '" + action_labels_[u] + "' must be " +
                       std::to_string(s) + "x" + std::to_string(s));
    }
    for (Eigen::Index i = 0; i < s; ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < s; ++j) {
        const double v = k(i, j);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ModelError("probability p(" + state_labels_[j] + "|" + state_labels_[i] + "," +
                           action_labels_[u] + ") = " + format_double(v) + " outside [0,1]");
        }
        sum += v;
        if (v > 0.0) allowed_(i, j) = true;
      }
      if (std::abs(sum - 1.0) > kProbabilityTol) {
        throw ModelError("row-sum violation at (state '" + state_labels_[i] + "', action '" +
                         action_labels_[u] + "'): sum = " + format_double(sum) +
                         ", deviation = " + format_double(sum - 1.0));
      }
    }
  }

  union_support_.resize(static_cast<std::size_t>(s));
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      if (allowed_(i, j)) union_support_[i].push_back(static_cast<std::size_t>(j));
    }
  }
}

std::size_t MdpModel::state_index(const std::string& label) const {
  auto it = std::find(state_labels_.begin(), state_labels_.end(), label);
  if (it == state_labels_.end()) throw ModelError("unknown state label '" + label + "'");
  return static_cast<std::size_t>(it - state_labels_.begin());
}

std::size_t MdpModel::action_index(const std::string& label) const {
  auto it = std::find(action_labels_.begin(), action_labels_.end(), label);
  if (it == action_labels_.end()) throw ModelError("unknown action label '" + label + "'");
  return static_cast<std::size_t>(it - action_labels_.begin());
}

bool is_distribution(std::span<const double> row, double tol) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// StationaryPolicy ---------------------------------------------------------

StationaryPolicy::StationaryPolicy(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index u = 0; u < rows_.cols(); ++u) {
      if (!(rows_(i, u) >= 0.0)) {
        throw ModelError("policy has a negative or NaN weight at state index " + std::to_string(i));
      }
      sum += rows_(i, u);
    }
    if (std::abs(sum - 1.0) > kProbabilityTol) {
      throw ModelError("policy row " + std::to_string(i) + " sums to " + format_double(sum));
    }
  }
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  return StationaryPolicy(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(num_states),
                                                    static_cast<Eigen::Index>(num_actions),
                                                    1.0 / static_cast<double>(num_actions)));
}

StationaryPolicy StationaryPolicy::mix(const StationaryPolicy& a, const StationaryPolicy& b, double t) {
  if (a.rows_.rows() != b.rows_.rows() || a.rows_.cols() != b.rows_.cols()) {
    throw ModelError("cannot mix policies of different shapes");
  }
  Eigen::MatrixXd m = (1.0 - t) * a.rows_ + t * b.rows_;
  // Rounding may push a row sum a few ulps away from 1.
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
  return StationaryPolicy(std::move(m));
}

StationaryPolicy PurePolicy::to_stationary(std::size_t num_actions) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(choice_.size()),
                                            static_cast<Eigen::Index>(num_actions));
  for (std::size_t i = 0; i < choice_.size(); ++i) {
    if (choice_[i] >= num_actions) throw ModelError("pure policy action index out of range");
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(choice_[i])) = 1.0;
  }
  return StationaryPolicy(std::move(m));
}

// KernelMatrix -------------------------------------------------------------

KernelMatrix::KernelMatrix(const MdpModel& model, Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const auto s = static_cast<Eigen::Index>(model.num_states());
  if (entries_.rows() != s || entries_.cols() != s) {
    throw ModelError("kernel matrix must be " + std::to_string(s) + "x" + std::to_string(s));
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < s; ++j) {
      const double v = entries_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ModelError("kernel entry (" + std::to_string(i) + "," + std::to_string(j) +
                         ") = " + format_double(v) + " outside [0,1]");
      }
      if (v > 0.0 && !model.in_union_support(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        throw ModelError("kernel puts mass on '" + model.state_label(j) + "' from '" +
                         model.state_label(i) + "' outside the union support");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilityTol) {
      throw ModelError("kernel row " + std::to_string(i) + " sums to " + format_double(sum));
    }
  }
}

// apply_policy -------------------------------------------------------------

PolicyChain apply_policy(const MdpModel& model, const StationaryPolicy& policy) {
  const auto s = static_cast<Eigen::Index>(model.num_states());
  if (policy.num_states() != model.num_states() || policy.num_actions() != model.num_actions()) {
    throw ModelError("policy dimensions " + std::to_string(policy.num_states()) + "x" +
                     std::to_string(policy.num_actions()) + " do not match model " +
                     std::to_string(model.num_states()) + "x" + std::to_string(model.num_actions()));
  }
  PolicyChain chain{Eigen::MatrixXd::Zero(s, s), Eigen::VectorXd::Zero(s)};
  for (std::size_t u = 0; u < model.num_actions(); ++u) {
    const Eigen::VectorXd w = policy.rows().col(static_cast<Eigen::Index>(u));
    chain.kernel += w.asDiagonal() * model.kernel(u);
    chain.cost += w.cwiseProduct(model.costs().col(static_cast<Eigen::Index>(u)));
  }
  return chain;
}

// JSON ---------------------------------------------------------------------

MdpModel parse_model(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw ModelError("model document must be a JSON object");
    for (const char* key : {"states", "actions", "transitions", "costs"}) {
      if (!doc.contains(key)) throw ModelError(std::string("model is missing field '") + key + "'");
    }
    auto states = doc.at("states").get<std::vector<std::string>>();
    auto actions = doc.at("actions").get<std::vector<std::string>>();
    const auto s = static_cast<Eigen::Index>(states.size());
    const auto a = static_cast<Eigen::Index>(actions.size());

    const auto& tr = doc.at("transitions");
    if (!tr.is_object()) throw ModelError("'transitions' must map action labels to matrices");
    for (const auto& [label, _] : tr.items()) {
      if (std::find(actions.begin(), actions.end(), label) == actions.end()) {
        throw ModelError("transitions given for unknown action '" + label + "'");
      }
    }
    std::vector<Eigen::MatrixXd> kernels;
    kernels.reserve(actions.size());
    for (const auto& label : actions) {
      if (!tr.contains(label)) throw ModelError("no transition matrix for action '" + label + "'");
      const auto rows = tr.at(label).get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(rows.size()) != s) {
        throw ModelError("transition matrix for action '" + label + "' has " +
                         std::to_string(rows.size()) + " rows, expected " + std::to_string(s));
      }
      Eigen::MatrixXd k(s, s);
      for (Eigen::Index i = 0; i < s; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != s) {
          throw ModelError("transition row " + std::to_string(i) + " for action '" + label + "' has " +
                           std::to_string(rows[i].size()) + " entries, expected " + std::to_string(s));
        }
        for (Eigen::Index j = 0; j < s; ++j) k(i, j) = rows[i][j];
      }
      kernels.push_back(std::move(k));
    }

    const auto cost_rows = doc.at("costs").get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(cost_rows.size()) != s) {
      throw ModelError("'costs' has " + std::to_string(cost_rows.size()) + " rows, expected " +
                       std::to_string(s));
    }
    Eigen::MatrixXd costs(s, a);
    for (Eigen::Index i = 0; i < s; ++i) {
      if (static_cast<Eigen::Index>(cost_rows[i].size()) != a) {
        throw ModelError("'costs' row " + std::to_string(i) + " has " +
                         std::to_string(cost_rows[i].size()) + " entries, expected " + std::to_string(a));
      }
      for (Eigen::Index u = 0; u < a; ++u) costs(i, u) = cost_rows[i][u];
    }
    return MdpModel(std::move(states), std::move(actions), std::move(kernels), std::move(costs));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

MdpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("parse error in '" + path.string() + "': " + e.what());
  }
  return parse_model(doc);
}

nlohmann::ordered_json model_to_json(const MdpModel& model) {
  nlohmann::ordered_json out;
  out["states"] = model.state_labels();
  out["actions"] = model.action_labels();
  nlohmann::ordered_json tr = nlohmann::ordered_json::object();
  const auto s = static_cast<Eigen::Index>(model.num_states());
  for (std::size_t u = 0; u < model.num_actions(); ++u) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(s), std::vector<double>(static_cast<std::size_t>(s)));
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) rows[i][j] = model.kernel(u)(i, j);
    }
    tr[model.action_label(u)] = rows;
  }
  out["transitions"] = tr;
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(s), std::vector<double>(model.num_actions()));
  for (Eigen::Index i = 0; i < s; ++i) {
    for (std::size_t u = 0; u < model.num_actions(); ++u) costs[i][u] = model.cost(static_cast<std::size_t>(i), u);
  }
  out["costs"] = costs;
  return out;
}

StationaryPolicy parse_policy(const MdpModel& model, const nlohmann::json& doc) {
  try {
    const auto& body = doc.contains("policy") ? doc.at("policy") : doc;
    if (!body.is_object()) throw ModelError("policy must be an object keyed by state label");
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.num_states()),
                                                 static_cast<Eigen::Index>(model.num_actions()));
    std::vector<bool> seen(model.num_states(), false);
    for (const auto& [state, spec] : body.items()) {
      const auto i = model.state_index(state);
      seen[i] = true;
      if (spec.is_string()) {
        rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(model.action_index(spec.get<std::string>()))) = 1.0;
      } else if (spec.is_object()) {
        for (const auto& [action, w] : spec.items()) {
          rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(model.action_index(action))) = w.get<double>();
        }
      } else {
        throw ModelError("policy entry for state '" + state + "' must be an action label or a weight map");
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw ModelError("policy does not cover state '" + model.state_label(i) + "'");
    }
    return StationaryPolicy(std::move(rows));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed policy: ") + e.what());
  }
}

StationaryPolicy load_policy(const MdpModel& model, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open policy file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("parse error in '" + path.string() + "': " + e.what());
  }
  return parse_policy(model, doc);
}

}  // namespace riskmdp
