// pendrot: parameter checks, parameter search, rotation census and record verification.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "pendrot/bounds.hpp"
#include "pendrot/io.hpp"
#include "pendrot/solver.hpp"

namespace po = boost::program_options;
namespace fs = std::filesystem;
using namespace pendrot;

namespace {

constexpr int kOk = 0, kNegative = 1, kUsage = 2;

const char* kUsageText =
    "usage: pendrot <command> [options]\n"
    "\n"
    "commands:\n"
    "  check-params <config> [--T t]        constants, period window, levels, certificates\n"
    "  search-params --N n --v \"1 0\" --M0 m  [--budget b] [--g g] [--amp a] [--out file]\n"
    "  find <config> [--out dir] [--threads n] [--seed s]\n"
    "  verify <record.json>...\n"
    "\n"
    "exit codes: 0 success, 1 negative result, 2 usage error\n";

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

po::variables_map parse(const std::vector<std::string>& args, const po::options_description& opts,
                        const po::positional_options_description& pos) {
  po::variables_map vm;
  try {
    po::store(po::command_line_parser(args).options(opts).positional(pos).run(), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    throw Usage(e.what());
  }
  return vm;
}

std::string g17(double x) { return io::fmt17(x); }

int check_params(const std::vector<std::string>& args) {
  po::options_description opts;
  opts.add_options()("config", po::value<std::string>()->required())("T", po::value<double>())(
      "lambda-res", po::value<int>()->default_value(0));
  po::positional_options_description pos;
  pos.add("config", 1);
  const auto vm = parse(args, opts, pos);
  const auto cfg = io::load_config(vm["config"].as<std::string>());
  const auto& p = cfg.problem;
  const double t = vm.count("T") ? vm["T"].as<double>() : p.period;
  const Forcing f(t, p.forcing.terms());
  const auto rep = constants_report(p.params, p.winding, f, t, p.forcing_bound(),
                                    vm["lambda-res"].as<int>());

  std::cout << "lambda        " << g17(rep.lambda.refined) << " (grid " << g17(rep.lambda.grid) << ", resolution "
            << rep.lambda.resolution << ")\n"
            << "lambda_used   " << g17(rep.lambda_used) << "\n"
            << "gamma1        " << g17(rep.gamma1) << "\n"
            << "gamma2        " << g17(rep.gamma2) << "\n"
            << "gamma         " << g17(rep.gamma) << "\n"
            << "Gamma        ";
  for (double x : rep.gamma_set.closed_form) std::cout << ' ' << g17(x);
  std::cout << "\nM0            " << g17(rep.m0) << "\n"
            << "margin        " << g17(rep.window.margin) << "\n"
            << "feasible      " << (rep.window.feasible ? "yes" : "no") << "\n";
  if (rep.window.feasible) {
    std::cout << "window        [" << g17(rep.window.t1) << ", " << g17(rep.window.t2) << "]\n";
    if (rep.window.strict_feasible)
      std::cout << "strict window [" << g17(rep.window.strict_t1) << ", " << g17(rep.window.strict_t2) << "]\n";
    else
      std::cout << "strict window empty\n";
    std::cout << "window check  " << rep.window.window_violations << " of " << rep.window.window_samples
              << " samples violate gamma T^2 > gamma1 + gamma2 T^4\n";
  }
  if (rep.level_window.nonempty)
    std::cout << "level window  [" << g17(rep.level_window.lo) << ", " << g17(rep.level_window.hi) << "]\n";
  std::cout << "T             " << g17(t) << "\n"
            << "f_v           " << g17(rep.f_v) << "\n"
            << "a0            " << g17(rep.a0) << "\n";
  if (rep.levels) {
    const auto& lv = *rep.levels;
    for (std::size_t k = 0; k < lv.a.size(); ++k)
      std::cout << "level k=" << k + 1 << "     C1 " << g17(lv.c1[k]) << "  a " << g17(lv.a[k]) << "  C2 "
                << g17(lv.c2[k]) << "\n";
    std::cout << "a_n           " << g17(lv.a_n) << "\n";
  } else {
    std::cout << "levels        unavailable: " << rep.levels_note << "\n";
  }
  bool all_pass = true;
  for (const auto& c : potential_certificates(p.params, p.winding)) {
    all_pass = all_pass && c.passed;
    if (c.passed)
      std::cout << "certificate k=" << c.k << " PASS  max V0|M " << g17(c.detail->max_on_m) << " <= "
                << g17(c.detail->level_k) << ", min V0|O " << g17(c.detail->min_on_o) << " >= "
                << g17(c.detail->level_next) << "\n";
    else
      std::cout << "certificate k=" << c.k << " FAIL  " << c.failure << "\n";
  }
  return rep.window.feasible && all_pass ? kOk : kNegative;
}

int search_params(const std::vector<std::string>& args) {
  po::options_description opts;
  opts.add_options()("N", po::value<int>()->required())("v", po::value<std::string>()->required())(
      "M0", po::value<double>()->required())("budget", po::value<int>()->default_value(2000))(
      "g", po::value<double>()->default_value(1.0))("amp", po::value<double>()->default_value(0.0))(
      "out", po::value<std::string>());
  const auto vm = parse(args, opts, {});
  const int n = vm["N"].as<int>();
  std::vector<int> vv;
  {
    std::string s = vm["v"].as<std::string>();
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream in(s);
    for (int x; in >> x;) vv.push_back(x);
  }
  const auto v = WindingVector::validate(vv);
  const double m0 = vm["M0"].as<double>();
  const double amp = vm["amp"].as<double>();
  if (amp < 0 || amp > m0) throw Usage("--amp must lie in [0, M0]");
  const auto res = parameter_search(n, v, m0, vm["budget"].as<int>(), vm["g"].as<double>());
  std::cout << "evaluations " << res.evaluations << "\nmargin      " << g17(res.margin) << "\n";
  if (!res.found) {
    std::cout << "no feasible parameters within the budget\n";
    return kNegative;
  }
  io::RunConfig cfg;
  cfg.problem.params = res.params;
  cfg.problem.winding = v;
  const auto rep = constants_report(res.params, v, Forcing::zero(1.0, n), 1.0, m0);
  // geometric centre of the level window when it exists, else of [T1, T2]
  const double t = rep.level_window.nonempty ? std::sqrt(rep.level_window.lo * rep.level_window.hi)
                                             : std::sqrt(rep.window.t1 * rep.window.t2);
  cfg.problem.period = t;
  cfg.problem.m0 = m0;
  const int rot = v.rotating_indices().front();
  cfg.problem.forcing = amp > 0 ? Forcing::single_sine(t, n, rot, amp) : Forcing::zero(t, n);
  std::cout << "T           " << g17(t) << "\n";
  const std::string text = io::format_config(cfg);
  if (vm.count("out")) {
    std::ofstream out(vm["out"].as<std::string>());
    if (!out) throw io::FormatError("cannot write '" + vm["out"].as<std::string>() + "'");
    out << text;
  } else {
    std::cout << "\n" << text;
  }
  return kOk;
}

int find(const std::vector<std::string>& args) {
  po::options_description opts;
  opts.add_options()("config", po::value<std::string>()->required())(
      "out", po::value<std::string>()->default_value("pendrot_out"))("threads", po::value<int>())(
      "seed", po::value<std::uint64_t>());
  po::positional_options_description pos;
  pos.add("config", 1);
  const auto vm = parse(args, opts, pos);
  auto cfg = io::load_config(vm["config"].as<std::string>());
  if (vm.count("threads")) cfg.solver.threads = vm["threads"].as<int>();
  if (vm.count("seed")) cfg.solver.seed = vm["seed"].as<std::uint64_t>();
  const auto rep = census(cfg.problem, cfg.solver);

  const fs::path dir = vm["out"].as<std::string>();
  fs::create_directories(dir);
  auto problem = cfg.problem;
  problem.harmonics = rep.harmonics_used;
  for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "solution_%03zu.json", i);
    std::ofstream(dir / name) << io::record_json(problem, rep.solutions[i], static_cast<int>(i)).dump(2) << "\n";
  }
  std::ofstream(dir / "census.json") << io::census_json(problem, rep).dump(2) << "\n";
  std::ofstream(dir / "census.tsv") << io::census_tsv(rep);

  std::cout << "starts " << rep.starts << ", converged " << rep.converged << ", distinct " << rep.solutions.size()
            << ", certified " << rep.certified << "\n";
  std::cout << io::census_tsv(rep);
  std::cout << "bound " << rep.applicable_bound << " (category: " << rep.category_bound;
  if (rep.level_bound) std::cout << ", levels: " << *rep.level_bound;
  std::cout << ")\n";
  for (const auto& b : rep.bands)
    std::cout << "band " << b.band << ": " << b.found << " found, " << b.expected << " expected\n";
  for (const auto& n : rep.notes) std::cout << "note: " << n << "\n";
  std::cout << (rep.meets_bound ? "bound met" : "SHORTFALL") << "; records in " << dir.string() << "\n";
  return rep.meets_bound ? kOk : kNegative;
}

int verify(const std::vector<std::string>& args) {
  if (args.empty()) throw Usage("verify needs at least one record");
  bool all = true;
  for (const auto& path : args) {
    const auto lr = io::load_record(path);
    const auto c = io::recertify(lr);
    all = all && c.pass;
    std::cout << (c.pass ? "PASS " : "FAIL ") << path << "  defect " << g17(c.defect) << " (tol " << g17(c.defect_tol)
              << ")  residual " << g17(c.residual) << " (tol " << g17(c.residual_tol) << ")\n";
  }
  return all ? kOk : kNegative;
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsageText;
    return kUsage;
  }
  const std::string cmd = argv[1];
  const std::vector<std::string> args(argv + 2, argv + argc);
  try {
    if (cmd == "check-params") return check_params(args);
    if (cmd == "search-params") return search_params(args);
    if (cmd == "find") return find(args);
    if (cmd == "verify") return verify(args);
    if (cmd == "-h" || cmd == "--help") {
      std::cout << kUsageText;
      return kOk;
    }
    std::cerr << "unknown command '" << cmd << "'\n" << kUsageText;
    return kUsage;
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const io::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
  } catch (const HypothesisViolation& e) {
    std::cerr << "hypothesis: " << e.what() << "\n";
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
  }
  return kUsage;
}
