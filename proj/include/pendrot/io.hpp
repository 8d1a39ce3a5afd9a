#pragma once

/**
 * @file io.hpp
 * @brief Run configuration (INI), solution records and census summaries (JSON, TSV).
 */

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "pendrot/error.hpp"
#include "pendrot/solver.hpp"

namespace pendrot::io {

/// Malformed configuration or record text.
class FormatError : public Error {
public:
  using Error::Error;
};

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::vector<T> out;
  std::string tok;
  while (in >> tok) {
    for (char& c : tok)
      if (c == ',') c = ' ';
    std::istringstream part(tok);
    T x;
    while (part >> x) out.push_back(x);
    if (!part.eof()) throw FormatError("bad number in '" + key + "': " + tok);
  }
  return out;
}

template <class T>
T get(const boost::property_tree::ptree& pt, const std::string& key) {
  const auto node = pt.get_optional<std::string>(key);
  if (!node) throw FormatError("missing key '" + key + "'");
  if constexpr (std::is_same_v<T, std::string>) return *node;
  std::istringstream in(*node);
  T x{};
  if (!(in >> x) || !(in >> std::ws).eof()) throw FormatError("bad value for '" + key + "': " + *node);
  return x;
}

template <class T>
T get_or(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  return pt.get_optional<std::string>(key) ? get<T>(pt, key) : fallback;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    if constexpr (std::is_floating_point_v<T>) s += fmt17(xs[i]);
    else s += std::to_string(xs[i]);
  }
  return s;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace detail

struct RunConfig {
  RotationProblem problem;
  SolverOptions solver;
};

/**
 * @brief Parse the INI configuration.
 *
 * [forcing] holds f1..fN, each a ';'-separated list of "k cos sin" triples.
 * [problem] M0 is optional and defaults to the sampled forcing bound.
 */
inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  using detail::get;
  using detail::get_or;
  RunConfig c;
  const int n = get<int>(tree, "pendulum.N");
  if (n < 1) throw FormatError("pendulum.N must be positive");
  const auto m = detail::parse_list<double>(get<std::string>(tree, "pendulum.m"), "pendulum.m");
  const auto l = detail::parse_list<double>(get<std::string>(tree, "pendulum.l"), "pendulum.l");
  if (static_cast<int>(m.size()) != n || static_cast<int>(l.size()) != n)
    throw FormatError("pendulum.m and pendulum.l need N entries");
  c.problem.params = PendulumParams::make(m, l, get_or<double>(tree, "pendulum.g", 1.0));
  const auto v = detail::parse_list<int>(get<std::string>(tree, "problem.v"), "problem.v");
  if (static_cast<int>(v.size()) != n) throw FormatError("problem.v needs N entries");
  c.problem.winding = WindingVector::validate(v);
  c.problem.period = get<double>(tree, "problem.T");
  if (!(c.problem.period > 0)) throw FormatError("problem.T must be positive");
  c.problem.harmonics = get_or<int>(tree, "problem.K", 32);
  c.problem.quad_points = get_or<int>(tree, "problem.M", 0);
  c.problem.m0 = get_or<double>(tree, "problem.M0", -1.0);

  std::vector<std::vector<Harmonic>> terms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::string key = "forcing.f" + std::to_string(i + 1);
    const auto text = tree.get_optional<std::string>(key);
    if (!text) continue;
    std::istringstream groups(*text);
    std::string group;
    while (std::getline(groups, group, ';')) {
      const auto nums = detail::parse_list<double>(group, key);
      if (nums.empty()) continue;
      if (nums.size() != 3 || nums[0] < 1 || nums[0] != std::floor(nums[0]))
        throw FormatError("'" + key + "' needs triples 'k cos sin' with integer k >= 1");
      terms[static_cast<std::size_t>(i)].push_back({static_cast<int>(nums[0]), nums[1], nums[2]});
    }
  }
  c.problem.forcing = Forcing(c.problem.period, std::move(terms));

  auto& s = c.solver;
  s.density = get_or<int>(tree, "solver.density", s.density);
  s.perturbations = get_or<int>(tree, "solver.r", s.perturbations);
  s.seed = get_or<std::uint64_t>(tree, "solver.seed", s.seed);
  s.tol_scale = get_or<double>(tree, "solver.tol", s.tol_scale);
  s.max_iters = get_or<int>(tree, "solver.max_iters", s.max_iters);
  s.threads = get_or<int>(tree, "solver.threads", s.threads);
  s.max_harmonics = get_or<int>(tree, "solver.max_K", s.max_harmonics);
  s.certify_steps = get_or<int>(tree, "solver.steps", s.certify_steps);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  return parse_config(in);
}

inline std::string format_config(const RunConfig& c) {
  const auto& p = c.problem;
  std::ostringstream o;
  o << "[pendulum]\n"
    << "N = " << p.params.size() << "\n"
    << "m = " << detail::join(detail::to_std(p.params.mass)) << "\n"
    << "l = " << detail::join(detail::to_std(p.params.length)) << "\n"
    << "g = " << fmt17(p.params.gravity) << "\n\n"
    << "[problem]\n"
    << "v = " << detail::join(p.winding.values()) << "\n"
    << "T = " << fmt17(p.period) << "\n"
    << "K = " << p.harmonics << "\n";
  if (p.quad_points > 0) o << "M = " << p.quad_points << "\n";
  if (p.m0 >= 0) o << "M0 = " << fmt17(p.m0) << "\n";
  o << "\n[forcing]\n";
  for (int i = 0; i < p.forcing.size(); ++i) {
    std::string line;
    for (const auto& h : p.forcing.terms()[static_cast<std::size_t>(i)]) {
      if (!line.empty()) line += "; ";
      line += std::to_string(h.k) + " " + fmt17(h.cos_amp) + " " + fmt17(h.sin_amp);
    }
    o << "f" << i + 1 << " = " << line << "\n";
  }
  const auto& s = c.solver;
  o << "\n[solver]\n"
    << "density = " << s.density << "\n"
    << "r = " << s.perturbations << "\n"
    << "seed = " << s.seed << "\n"
    << "tol = " << fmt17(s.tol_scale) << "\n"
    << "max_iters = " << s.max_iters << "\n"
    << "threads = " << s.threads << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// solution records

using nlohmann::json;

inline constexpr const char* kRecordFormat = "pendrot-solution/1";

inline json problem_json(const RotationProblem& p) {
  json f = json::array();
  for (const auto& coord : p.forcing.terms()) {
    json c = json::array();
    for (const auto& h : coord) c.push_back({{"k", h.k}, {"cos", h.cos_amp}, {"sin", h.sin_amp}});
    f.push_back(c);
  }
  return {{"m", detail::to_std(p.params.mass)},
          {"l", detail::to_std(p.params.length)},
          {"g", p.params.gravity},
          {"v", p.winding.values()},
          {"T", p.period},
          {"K", p.harmonics},
          {"M", p.quad_points},
          {"M0", p.forcing_bound()},
          {"forcing", f},
          {"action_sign", "+"}};
}

inline RotationProblem problem_from_json(const json& j) {
  RotationProblem p;
  p.params = PendulumParams::make(j.at("m").get<std::vector<double>>(), j.at("l").get<std::vector<double>>(),
                                  j.at("g").get<double>());
  p.winding = WindingVector::validate(j.at("v").get<std::vector<int>>());
  p.period = j.at("T").get<double>();
  p.harmonics = j.at("K").get<int>();
  p.quad_points = j.at("M").get<int>();
  p.m0 = j.at("M0").get<double>();
  std::vector<std::vector<Harmonic>> terms;
  for (const auto& coord : j.at("forcing")) {
    terms.emplace_back();
    for (const auto& h : coord)
      terms.back().push_back({h.at("k").get<int>(), h.at("cos").get<double>(), h.at("sin").get<double>()});
  }
  p.forcing = Forcing(p.period, std::move(terms));
  return p;
}

inline json certification_json(const Certification& c) {
  return {{"defect", c.defect},   {"defect_tol", c.defect_tol}, {"residual", c.residual},
          {"residual_tol", c.residual_tol}, {"sup_gap", c.sup_gap}, {"steps", c.steps},
          {"pass", c.pass}};
}

inline json record_json(const RotationProblem& p, const SolutionRecord& r, int id) {
  std::vector<std::vector<double>> a, b;
  for (int i = 0; i < r.loop.dim(); ++i) {
    a.push_back(detail::to_std(r.loop.cos_coef.row(i).transpose()));
    b.push_back(detail::to_std(r.loop.sin_coef.row(i).transpose()));
  }
  json j = {{"format", kRecordFormat},
            {"id", id},
            {"problem", problem_json(p)},
            {"xbar", detail::to_std(r.loop.mean)},
            {"cos", a},
            {"sin", b},
            {"action",
             {{"kinetic", r.breakdown.kinetic},
              {"potential", r.breakdown.potential},
              {"forcing", r.breakdown.forcing},
              {"total", r.breakdown.total}}},
            {"gradient_norm", r.grad_norm},
            {"tolerance", r.tolerance},
            {"iterations", r.iterations},
            {"hessian",
             {{"morse_index", r.morse_index},
              {"near_zero", r.near_zero},
              {"nondegenerate", r.nondegenerate},
              {"threshold", r.hessian_threshold},
              {"head", r.hessian_head}}},
            {"band", r.band},
            {"orbit_representative", r.orbit_representative},
            {"cluster_size", r.cluster_size},
            {"seed_id", r.seed_id},
            {"provenance", r.provenance},
            {"symmetric_solve", r.symmetric_solve},
            {"under_resolved", r.under_resolved},
            {"oracles_hold", r.oracles_hold}};
  if (r.certification) j["certification"] = certification_json(*r.certification);
  return j;
}

struct LoadedRecord {
  RotationProblem problem;
  SolutionRecord record;
  int id = 0;
};

inline LoadedRecord record_from_json(const json& j) {
  if (j.value("format", "") != kRecordFormat) throw FormatError("not a solution record");
  try {
    LoadedRecord out;
    out.id = j.at("id").get<int>();
    out.problem = problem_from_json(j.at("problem"));
    const auto& p = out.problem;
    auto& r = out.record;
    const auto mean = j.at("xbar").get<std::vector<double>>();
    const auto a = j.at("cos").get<std::vector<std::vector<double>>>();
    const auto b = j.at("sin").get<std::vector<std::vector<double>>>();
    const int n = p.params.size(), k = p.harmonics;
    if (static_cast<int>(mean.size()) != n || static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
      throw FormatError("coefficient table has wrong dimension");
    r.loop = LoopPath::constant(p.period, p.winding, Eigen::Map<const Eigen::VectorXd>(mean.data(), n), k);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(a[static_cast<std::size_t>(i)].size()) != k ||
          static_cast<int>(b[static_cast<std::size_t>(i)].size()) != k)
        throw FormatError("coefficient table has wrong harmonic count");
      for (int h = 0; h < k; ++h) {
        r.loop.cos_coef(i, h) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)];
        r.loop.sin_coef(i, h) = b[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)];
      }
    }
    const auto& act = j.at("action");
    r.breakdown = {act.at("kinetic").get<double>(), act.at("potential").get<double>(),
                   act.at("forcing").get<double>(), act.at("total").get<double>()};
    r.grad_norm = j.at("gradient_norm").get<double>();
    r.tolerance = j.at("tolerance").get<double>();
    r.iterations = j.at("iterations").get<int>();
    const auto& h = j.at("hessian");
    r.morse_index = h.at("morse_index").get<int>();
    r.near_zero = h.at("near_zero").get<int>();
    r.nondegenerate = h.at("nondegenerate").get<bool>();
    r.hessian_threshold = h.at("threshold").get<double>();
    r.hessian_head = h.at("head").get<std::vector<double>>();
    r.band = j.at("band").get<int>();
    r.orbit_representative = j.at("orbit_representative").get<bool>();
    r.cluster_size = j.at("cluster_size").get<int>();
    r.seed_id = j.at("seed_id").get<int>();
    r.provenance = j.at("provenance").get<std::string>();
    r.symmetric_solve = j.at("symmetric_solve").get<bool>();
    r.under_resolved = j.at("under_resolved").get<bool>();
    r.oracles_hold = j.at("oracles_hold").get<bool>();
    if (j.contains("certification")) {
      const auto& c = j.at("certification");
      r.certification = Certification{c.at("defect").get<double>(),   c.at("defect_tol").get<double>(),
                                      c.at("residual").get<double>(), c.at("residual_tol").get<double>(),
                                      c.at("sup_gap").get<double>(),  c.at("steps").get<int>(),
                                      c.at("pass").get<bool>()};
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("solution record: ") + e.what());
  }
}

inline LoadedRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open record '" + path + "'");
  try {
    return record_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Re-run certification on a loaded record with its own problem and step count.
inline Certification recertify(const LoadedRecord& lr) {
  const int steps = lr.record.certification ? lr.record.certification->steps : 4096;
  return certify(lr.problem.params, lr.problem.forcing, lr.record.loop, lr.problem.forcing_bound(), steps);
}

// ---------------------------------------------------------------------------
// census summaries

inline json census_json(const RotationProblem& p, const CensusReport& r) {
  json sols = json::array();
  for (std::size_t i = 0; i < r.solutions.size(); ++i) {
    const auto& s = r.solutions[i];
    sols.push_back({{"id", i},
                    {"action", s.action()},
                    {"band", s.band},
                    {"morse_index", s.morse_index},
                    {"nondegenerate", s.nondegenerate},
                    {"defect", s.certification ? s.certification->defect : -1.0},
                    {"pass", s.certification && s.certification->pass},
                    {"cluster_size", s.cluster_size},
                    {"seed_id", s.seed_id}});
  }
  json bands = json::array();
  for (const auto& b : r.bands)
    bands.push_back({{"band", b.band},
                     {"lower", std::isinf(b.lower) ? json(nullptr) : json(b.lower)},
                     {"upper", b.upper},
                     {"expected", b.expected},
                     {"found", b.found}});
  json j = {{"problem", problem_json(p)},
            {"starts", r.starts},
            {"converged", r.converged},
            {"failed", r.failed},
            {"density_used", r.density_used},
            {"harmonics_used", r.harmonics_used},
            {"s1_quotient", r.s1_quotient},
            {"lambda_used", r.lambda_used},
            {"a0", r.a0},
            {"distinct", r.solutions.size()},
            {"certified", r.certified},
            {"category_bound", r.category_bound},
            {"nondegenerate_bound", r.nondegenerate_bound},
            {"all_nondegenerate", r.all_nondegenerate},
            {"level_bound", r.level_bound ? json(*r.level_bound) : json(nullptr)},
            {"applicable_bound", r.applicable_bound},
            {"meets_bound", r.meets_bound},
            {"every_band_hit", r.every_band_hit},
            {"bands", bands},
            {"solutions", sols},
            {"notes", r.notes}};
  if (r.reversal_center) j["reversal_center"] = *r.reversal_center;
  if (r.constants && r.constants->levels) {
    j["levels"] = {{"a", r.constants->levels->a}, {"a_n", r.constants->levels->a_n}};
  }
  return j;
}

/// One row per solution: id, action, band, Morse index, defect.
inline std::string census_tsv(const CensusReport& r) {
  std::ostringstream o;
  o << "id\taction\tband\tmorse\tdefect\tpass\n";
  for (std::size_t i = 0; i < r.solutions.size(); ++i) {
    const auto& s = r.solutions[i];
    o << i << '\t' << fmt17(s.action()) << '\t' << s.band << '\t' << s.morse_index << '\t'
      << fmt17(s.certification ? s.certification->defect : -1.0) << '\t'
      << (s.certification && s.certification->pass ? "PASS" : "FAIL") << '\n';
  }
  return o.str();
}

} // namespace pendrot::io
