#include "capmfg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "bundled_config.hpp"
#include "capmfg/error.hpp"

namespace capmfg {
namespace {

[[noreturn]] void parse_fail(const std::string& source, const YAML::Node& node,
                             const std::string& msg) {
  const auto mark = node.Mark();
  if (mark.is_null()) throw Error(ErrorKind::ParseError, fmt::format("{}: {}", source, msg));
  throw Error(ErrorKind::ParseError, fmt::format("{}:{}: {}", source, mark.line + 1, msg));
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  YAML::Node section(const YAML::Node& root, const std::string& key, bool required) const {
    YAML::Node node = root[key];
    if (!node) {
      if (required) parse_fail(source_, root, fmt::format("missing field '{}'", key));
      return node;
    }
    if (!node.IsMap()) parse_fail(source_, node, fmt::format("field '{}' must be a table", key));
    return node;
  }

  YAML::Node field(const YAML::Node& map, const std::string& path, const std::string& key,
                   bool required) const {
    YAML::Node node = map[key];
    if (!node && required) {
      parse_fail(source_, map, fmt::format("missing field '{}.{}'", path, key));
    }
    return node;
  }

  void known_keys(const YAML::Node& map, const std::string& path,
                  std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        parse_fail(source_, kv.first,
                   path.empty() ? fmt::format("unknown field '{}'", key)
                                : fmt::format("unknown field '{}.{}'", path, key));
      }
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& name, const char* expected) const {
    if (!node.IsScalar()) parse_fail(source_, node, fmt::format("'{}' must be {}", name, expected));
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      parse_fail(source_, node, fmt::format("'{}' must be {}", name, expected));
    }
  }

  double number(const YAML::Node& n, const std::string& name) const {
    return scalar<double>(n, name, "a number");
  }
  std::uint64_t count(const YAML::Node& n, const std::string& name) const {
    if (n.IsScalar() && !n.Scalar().empty() && n.Scalar().front() == '-') {
      parse_fail(source_, n, fmt::format("'{}' must be a nonnegative integer", name));
    }
    return scalar<std::uint64_t>(n, name, "a nonnegative integer");
  }
  bool flag(const YAML::Node& n, const std::string& name) const {
    return scalar<bool>(n, name, "true or false");
  }
  std::string text(const YAML::Node& n, const std::string& name) const {
    return scalar<std::string>(n, name, "a string");
  }

  Vector vector(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence()) parse_fail(source_, node, fmt::format("'{}' must be a list", name));
    Vector v(static_cast<Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      v[static_cast<Index>(i)] = number(node[i], fmt::format("{}[{}]", name, i));
    }
    return v;
  }

  Matrix matrix(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence() || node.size() == 0) {
      parse_fail(source_, node, fmt::format("'{}' must be a non-empty list of rows", name));
    }
    const std::size_t rows = node.size();
    std::size_t cols = 0;
    Matrix out;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row_name = fmt::format("{}[{}]", name, i);
      Vector row = vector(node[i], row_name);
      if (i == 0) {
        cols = static_cast<std::size_t>(row.size());
        if (cols == 0) parse_fail(source_, node[i], fmt::format("'{}' is empty", row_name));
        out.resize(static_cast<Index>(rows), static_cast<Index>(cols));
      } else if (static_cast<std::size_t>(row.size()) != cols) {
        parse_fail(source_, node[i],
                   fmt::format("'{}' has {} entries, expected {}", row_name, row.size(), cols));
      }
      out.row(static_cast<Index>(i)) = row.transpose();
    }
    return out;
  }

  template <class Enum>
  Enum choice(const YAML::Node& node, const std::string& name,
              std::initializer_list<std::pair<const char*, Enum>> options) const {
    const auto value = text(node, name);
    std::string listing;
    for (const auto& [label, e] : options) {
      if (value == label) return e;
      listing += listing.empty() ? label : fmt::format(", {}", label);
    }
    parse_fail(source_, node, fmt::format("'{}' must be one of: {}", name, listing));
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

template <class T, class F>
void optional_field(const Reader& rd, const YAML::Node& map, const std::string& path,
                    const char* key, T& target, F&& convert) {
  if (!map) return;
  if (auto node = rd.field(map, path, key, false)) {
    target = convert(node, fmt::format("{}.{}", path, key));
  }
}

constexpr std::initializer_list<std::pair<const char*, TopologyKind>> kTopologyNames = {
    {"scale-free", TopologyKind::ScaleFree}, {"ring", TopologyKind::Ring},
    {"complete", TopologyKind::Complete},    {"star", TopologyKind::Star},
    {"edge-list", TopologyKind::EdgeList}};
constexpr std::initializer_list<std::pair<const char*, ControlMode>> kControlNames = {
    {"scalar", ControlMode::ScalarOnCapacity}, {"per-edge", ControlMode::PerEdgeOnCapacity}};
constexpr std::initializer_list<std::pair<const char*, ConsensusForm>> kFormNames = {
    {"full-stacked", ConsensusForm::FullStacked}, {"isolated", ConsensusForm::IsolatedCapacity}};
constexpr std::initializer_list<std::pair<const char*, numerics::CareMethod>> kMethodNames = {
    {"hamiltonian", numerics::CareMethod::HamiltonianEigen},
    {"newton", numerics::CareMethod::NewtonKleinman}};
constexpr std::initializer_list<std::pair<const char*, numerics::CareForm>> kCareFormNames = {
    {"standard", numerics::CareForm::StandardSymmetric},
    {"one-sided", numerics::CareForm::OneSided}};

template <class Enum>
std::string_view name_of(std::initializer_list<std::pair<const char*, Enum>> options, Enum e) {
  for (const auto& [label, value] : options) {
    if (value == e) return label;
  }
  return "?";
}

ProjectConfig parse_root(const YAML::Node& root, const Reader& rd) {
  if (!root.IsMap()) parse_fail(rd.source(), root, "top level must be a table");
  rd.known_keys(root, "", {"network", "costs", "demand", "penalties", "simulation", "topology",
                           "care", "primal_dual", "consensus"});
  ProjectConfig cfg;

  const auto network = rd.section(root, "network", true);
  rd.known_keys(network, "network", {"incidence", "sinks", "labels"});
  const Matrix incidence = rd.matrix(rd.field(network, "network", "incidence", true),
                                     "network.incidence");
  std::vector<Index> sinks;
  {
    const auto node = rd.field(network, "network", "sinks", true);
    if (!node.IsSequence()) parse_fail(rd.source(), node, "'network.sinks' must be a list");
    for (std::size_t i = 0; i < node.size(); ++i) {
      sinks.push_back(static_cast<Index>(rd.count(node[i], fmt::format("network.sinks[{}]", i))));
    }
  }
  std::vector<std::string> labels;
  if (auto node = rd.field(network, "network", "labels", false)) {
    if (!node.IsSequence()) parse_fail(rd.source(), node, "'network.labels' must be a list");
    for (std::size_t i = 0; i < node.size(); ++i) {
      labels.push_back(rd.text(node[i], fmt::format("network.labels[{}]", i)));
    }
  }

  const auto costs = rd.section(root, "costs", true);
  rd.known_keys(costs, "costs", {"Q1", "Q2", "f1", "f2"});
  cfg.costs.Q1 = rd.matrix(rd.field(costs, "costs", "Q1", true), "costs.Q1");
  cfg.costs.Q2 = rd.matrix(rd.field(costs, "costs", "Q2", true), "costs.Q2");
  cfg.costs.f1 = rd.vector(rd.field(costs, "costs", "f1", true), "costs.f1");
  cfg.costs.f2 = rd.vector(rd.field(costs, "costs", "f2", true), "costs.f2");

  auto& sim = cfg.sim;
  const auto demand = rd.section(root, "demand", true);
  rd.known_keys(demand, "demand", {"mean", "std"});
  sim.demand_mean = rd.vector(rd.field(demand, "demand", "mean", true), "demand.mean");
  sim.demand_std = Vector::Zero(sim.demand_mean.size());
  if (auto node = rd.field(demand, "demand", "std", false)) {
    sim.demand_std = rd.vector(node, "demand.std");
  }

  auto num = [&](const YAML::Node& n, const std::string& name) { return rd.number(n, name); };
  auto cnt = [&](const YAML::Node& n, const std::string& name) { return rd.count(n, name); };
  auto flg = [&](const YAML::Node& n, const std::string& name) { return rd.flag(n, name); };

  const auto pen = rd.section(root, "penalties", true);
  rd.known_keys(pen, "penalties", {"q", "r", "s", "control"});
  sim.q_weight = rd.number(rd.field(pen, "penalties", "q", true), "penalties.q");
  sim.r_weight = rd.number(rd.field(pen, "penalties", "r", true), "penalties.r");
  sim.s_weight = rd.number(rd.field(pen, "penalties", "s", true), "penalties.s");
  optional_field(rd, pen, "penalties", "control", sim.control_mode,
                 [&](const YAML::Node& n, const std::string& name) {
                   return rd.choice(n, name, kControlNames);
                 });

  if (const auto s = rd.section(root, "simulation", false)) {
    rd.known_keys(s, "simulation",
                  {"agents", "dt", "steps", "seed", "init_mean", "init_std", "clamp",
                   "samples_per_population", "workers", "record_full_states", "divergence_bound"});
    optional_field(rd, s, "simulation", "agents", sim.agents, cnt);
    optional_field(rd, s, "simulation", "dt", sim.dt, num);
    optional_field(rd, s, "simulation", "steps", sim.steps, cnt);
    optional_field(rd, s, "simulation", "seed", sim.seed, cnt);
    optional_field(rd, s, "simulation", "init_mean", sim.init_mean, num);
    optional_field(rd, s, "simulation", "init_std", sim.init_std, num);
    optional_field(rd, s, "simulation", "clamp", sim.clamp_states, flg);
    optional_field(rd, s, "simulation", "samples_per_population", sim.samples_per_population, cnt);
    optional_field(rd, s, "simulation", "workers", sim.workers, cnt);
    optional_field(rd, s, "simulation", "record_full_states", sim.record_full_states, flg);
    optional_field(rd, s, "simulation", "divergence_bound", sim.divergence_bound, num);
  }

  if (const auto t = rd.section(root, "topology", false)) {
    rd.known_keys(t, "topology", {"kind", "attach", "seed", "edge_list"});
    optional_field(rd, t, "topology", "kind", sim.topology.kind,
                   [&](const YAML::Node& n, const std::string& name) {
                     return rd.choice(n, name, kTopologyNames);
                   });
    optional_field(rd, t, "topology", "attach", sim.topology.attach, cnt);
    if (auto n = rd.field(t, "topology", "seed", false)) {
      sim.topology.seed = rd.count(n, "topology.seed");
    }
    optional_field(rd, t, "topology", "edge_list", sim.topology.edge_list_path,
                   [&](const YAML::Node& n, const std::string& name) { return rd.text(n, name); });
    if (sim.topology.kind == TopologyKind::EdgeList && sim.topology.edge_list_path.empty()) {
      parse_fail(rd.source(), t, "missing field 'topology.edge_list'");
    }
  }

  if (const auto c = rd.section(root, "care", false)) {
    rd.known_keys(c, "care", {"method", "max_iter", "residual_tol", "form"});
    optional_field(rd, c, "care", "method", sim.care.method,
                   [&](const YAML::Node& n, const std::string& name) {
                     return rd.choice(n, name, kMethodNames);
                   });
    optional_field(rd, c, "care", "form", sim.care.form,
                   [&](const YAML::Node& n, const std::string& name) {
                     return rd.choice(n, name, kCareFormNames);
                   });
    optional_field(rd, c, "care", "max_iter", sim.care.max_iter,
                   [&](const YAML::Node& n, const std::string& name) {
                     return static_cast<int>(rd.count(n, name));
                   });
    optional_field(rd, c, "care", "residual_tol", sim.care.residual_tol, num);
  }

  if (const auto pd = rd.section(root, "primal_dual", false)) {
    rd.known_keys(pd, "primal_dual", {"dt", "max_steps", "stop_tol", "projected"});
    optional_field(rd, pd, "primal_dual", "dt", cfg.pd.dt, num);
    optional_field(rd, pd, "primal_dual", "max_steps", cfg.pd.max_steps, cnt);
    optional_field(rd, pd, "primal_dual", "stop_tol", cfg.pd.stop_tol, num);
    optional_field(rd, pd, "primal_dual", "projected", cfg.pd.projected, flg);
  }

  if (const auto cs = rd.section(root, "consensus", false)) {
    rd.known_keys(cs, "consensus", {"form", "fold_rho"});
    optional_field(rd, cs, "consensus", "form", cfg.consensus_form,
                   [&](const YAML::Node& n, const std::string& name) {
                     return rd.choice(n, name, kFormNames);
                   });
    optional_field(rd, cs, "consensus", "fold_rho", cfg.consensus_fold_rho, flg);
  }

  // Semantic checks keep the error kind of the invariant that failed.
  try {
    cfg.net = build_micro_network(incidence, std::move(sinks), std::move(labels));
    validate_costs(cfg.net, cfg.costs);
    validate_sim_config(cfg.net, sim);
    if (!(cfg.pd.dt > 0.0) || !(cfg.pd.stop_tol > 0.0)) {
      throw Error(ErrorKind::InvalidParams, "primal_dual.dt and primal_dual.stop_tol must be positive");
    }
    if (!(sim.care.residual_tol > 0.0) || sim.care.max_iter < 1) {
      throw Error(ErrorKind::InvalidParams, "care.residual_tol and care.max_iter must be positive");
    }
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", rd.source(), e.what()));
  }
  return cfg;
}

void emit_vector(YAML::Emitter& out, const Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Index i = 0; i < v.size(); ++i) out << v[i];
  out << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& out, const Matrix& M) {
  out << YAML::BeginSeq;
  for (Index i = 0; i < M.rows(); ++i) emit_vector(out, M.row(i).transpose());
  out << YAML::EndSeq;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

std::string_view to_string(TopologyKind kind) { return name_of(kTopologyNames, kind); }
std::string_view to_string(ControlMode mode) { return name_of(kControlNames, mode); }
std::string_view to_string(ConsensusForm form) { return name_of(kFormNames, form); }

ProjectConfig parse_config_string(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::ParseError,
                fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  return parse_root(root, Reader(source));
}

ProjectConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), path.string());
}

const char* bundled_config_yaml() { return detail::kBundledConfigYaml; }

ProjectConfig bundled_config() { return parse_config_string(bundled_config_yaml(), "paper"); }

ProjectConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "paper") return bundled_config();
  return parse_config(name_or_path);
}

std::string to_yaml(const ProjectConfig& cfg) {
  const auto& sim = cfg.sim;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;

  out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "incidence" << YAML::Value;
  emit_matrix(out, cfg.net.incidence);
  out << YAML::Key << "sinks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Index s : cfg.net.sink_nodes) out << s;
  out << YAML::EndSeq;
  out << YAML::Key << "labels" << YAML::Value << YAML::Flow << cfg.net.edge_labels;
  out << YAML::EndMap;

  out << YAML::Key << "costs" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "Q1" << YAML::Value;
  emit_matrix(out, cfg.costs.Q1);
  out << YAML::Key << "Q2" << YAML::Value;
  emit_matrix(out, cfg.costs.Q2);
  out << YAML::Key << "f1" << YAML::Value;
  emit_vector(out, cfg.costs.f1);
  out << YAML::Key << "f2" << YAML::Value;
  emit_vector(out, cfg.costs.f2);
  out << YAML::EndMap;

  out << YAML::Key << "demand" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mean" << YAML::Value;
  emit_vector(out, sim.demand_mean);
  out << YAML::Key << "std" << YAML::Value;
  emit_vector(out, sim.demand_std);
  out << YAML::EndMap;

  out << YAML::Key << "penalties" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "q" << YAML::Value << sim.q_weight;
  out << YAML::Key << "r" << YAML::Value << sim.r_weight;
  out << YAML::Key << "s" << YAML::Value << sim.s_weight;
  out << YAML::Key << "control" << YAML::Value << std::string(to_string(sim.control_mode));
  out << YAML::EndMap;

  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "agents" << YAML::Value << sim.agents;
  out << YAML::Key << "dt" << YAML::Value << sim.dt;
  out << YAML::Key << "steps" << YAML::Value << sim.steps;
  out << YAML::Key << "seed" << YAML::Value << sim.seed;
  out << YAML::Key << "init_mean" << YAML::Value << sim.init_mean;
  out << YAML::Key << "init_std" << YAML::Value << sim.init_std;
  out << YAML::Key << "clamp" << YAML::Value << sim.clamp_states;
  out << YAML::Key << "samples_per_population" << YAML::Value << sim.samples_per_population;
  out << YAML::Key << "workers" << YAML::Value << sim.workers;
  out << YAML::Key << "record_full_states" << YAML::Value << sim.record_full_states;
  out << YAML::Key << "divergence_bound" << YAML::Value << sim.divergence_bound;
  out << YAML::EndMap;

  out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(sim.topology.kind));
  out << YAML::Key << "attach" << YAML::Value << sim.topology.attach;
  if (sim.topology.seed) out << YAML::Key << "seed" << YAML::Value << *sim.topology.seed;
  if (!sim.topology.edge_list_path.empty()) {
    out << YAML::Key << "edge_list" << YAML::Value << sim.topology.edge_list_path;
  }
  out << YAML::EndMap;

  out << YAML::Key << "care" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "method" << YAML::Value
      << std::string(name_of(kMethodNames, sim.care.method));
  out << YAML::Key << "max_iter" << YAML::Value << sim.care.max_iter;
  out << YAML::Key << "residual_tol" << YAML::Value << sim.care.residual_tol;
  out << YAML::Key << "form" << YAML::Value << std::string(name_of(kCareFormNames, sim.care.form));
  out << YAML::EndMap;

  out << YAML::Key << "primal_dual" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << cfg.pd.dt;
  out << YAML::Key << "max_steps" << YAML::Value << cfg.pd.max_steps;
  out << YAML::Key << "stop_tol" << YAML::Value << cfg.pd.stop_tol;
  out << YAML::Key << "projected" << YAML::Value << cfg.pd.projected;
  out << YAML::EndMap;

  out << YAML::Key << "consensus" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "form" << YAML::Value << std::string(to_string(cfg.consensus_form));
  out << YAML::Key << "fold_rho" << YAML::Value << cfg.consensus_fold_rho;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

bool operator==(const ProjectConfig& a, const ProjectConfig& b) {
  const auto& x = a.sim;
  const auto& y = b.sim;
  return same(a.net.incidence, b.net.incidence) && a.net.sink_nodes == b.net.sink_nodes &&
         a.net.edge_labels == b.net.edge_labels && same(a.costs.Q1, b.costs.Q1) &&
         same(a.costs.Q2, b.costs.Q2) && same(a.costs.f1, b.costs.f1) && same(a.costs.f2, b.costs.f2) &&
         same(x.demand_mean, y.demand_mean) && same(x.demand_std, y.demand_std) &&
         x.q_weight == y.q_weight && x.r_weight == y.r_weight && x.s_weight == y.s_weight &&
         x.control_mode == y.control_mode && x.agents == y.agents && x.dt == y.dt &&
         x.steps == y.steps && x.seed == y.seed && x.init_mean == y.init_mean &&
         x.init_std == y.init_std && x.clamp_states == y.clamp_states &&
         x.samples_per_population == y.samples_per_population && x.workers == y.workers &&
         x.record_full_states == y.record_full_states &&
         x.divergence_bound == y.divergence_bound && x.topology.kind == y.topology.kind &&
         x.topology.attach == y.topology.attach && x.topology.seed == y.topology.seed &&
         x.topology.edge_list_path == y.topology.edge_list_path &&
         x.care.method == y.care.method && x.care.max_iter == y.care.max_iter &&
         x.care.residual_tol == y.care.residual_tol && x.care.form == y.care.form &&
         a.pd.dt == b.pd.dt && a.pd.max_steps == b.pd.max_steps &&
         a.pd.stop_tol == b.pd.stop_tol && a.pd.projected == b.pd.projected &&
         a.consensus_form == b.consensus_form && a.consensus_fold_rho == b.consensus_fold_rho;
}

}  // namespace capmfg
