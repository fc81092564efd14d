// kasfc: build, verify and evaluate space-filling-curve ReLU networks.
//
// Exit codes: 0 success, 1 certification failure, 2 usage or capacity error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kasfc/kasfc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertification = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::string function = "coord1";
  std::size_t d = 2;
  std::size_t K = 3;
  std::string K_range;
  double p = 2.0;
  std::optional<std::size_t> grid_bits;
  std::string out;
  std::string format = "text";
  std::string net_file;
  std::uint64_t seed = 1;
  std::size_t pwc_k = 2;
};

kasfc::HolderFunction resolve_function(const RunConfig& cfg) {
  kasfc::RegistryOptions options;
  options.seed = cfg.seed;
  options.pwc_resolution = cfg.pwc_k;
  return kasfc::make_registry_function(cfg.function, cfg.d, options);
}

std::vector<std::size_t> k_values(const RunConfig& cfg) {
  if (cfg.K_range.empty()) return {cfg.K};
  static const std::regex pattern(R"((\d+)\.\.(\d+))");
  std::smatch m;
  if (!std::regex_match(cfg.K_range, m, pattern)) throw kasfc::ParameterError("--K-range must look like a..b");
  const auto a = std::stoul(m[1]);
  const auto b = std::stoul(m[2]);
  if (a == 0 || b < a) throw kasfc::ParameterError("--K-range needs 1 <= a <= b");
  std::vector<std::size_t> out;
  for (auto k = a; k <= b; ++k) out.push_back(k);
  return out;
}

std::string fmt(double v) { return kasfc::format_double(v); }

int cmd_build(const RunConfig& cfg) {
  const auto f = resolve_function(cfg);
  const auto net = kasfc::assemble_full(f, cfg.K, cfg.p);
  const auto audit = kasfc::audit_weights(net);
  kasfc::save_network(net, cfg.out);
  std::cout << "architecture " << net.architecture().to_string() << '\n'
            << "r " << net.meta().r << '\n'
            << "max_weight " << fmt(audit.overall_max) << '\n'
            << "extractor_max " << fmt(audit.extractor_max) << " <= " << fmt(audit.extractor_bound) << '\n'
            << "outer_max " << fmt(audit.outer_max) << " <= " << fmt(audit.outer_bound) << '\n'
            << "global_bound " << fmt(audit.global_bound) << '\n'
            << "weight_audit " << (audit.ok ? "pass" : "FAIL") << '\n'
            << "wrote " << cfg.out << '\n';
  return audit.ok ? kExitOk : kExitCertification;
}

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

/// Runs every certification for one network; the network is built unless one was loaded.
std::vector<Check> certify(const kasfc::HolderFunction& f, const kasfc::ReluNetwork& net, std::size_t grid_bits,
                           kasfc::ErrorReport& report) {
  std::vector<Check> checks;
  const auto& m = net.meta();
  const bool expected_shape = net.architecture() == kasfc::full_architecture(f.dimension, m.K);
  checks.push_back({"architecture", expected_shape, net.architecture().to_string()});
  if (!expected_shape) return checks;

  const auto audit = kasfc::audit_weights(net);
  checks.push_back({"weight_audit", audit.ok,
                    "max " + fmt(audit.overall_max) + " global bound " + fmt(audit.global_bound)});

  const auto bad = kasfc::bad_set_intervals(m.K, m.r);
  const double bad_total = bad.total.to_double();
  const double bad_bound = static_cast<double>(m.K) * std::ldexp(1.0, -m.r);
  checks.push_back({"bad_set_measure", bad_total <= bad_bound && bad_bound <= std::exp2(-static_cast<double>(m.K) * m.beta * m.p),
                    bad.total.to_string() + " <= K 2^-r = " + fmt(bad_bound)});

  report = kasfc::make_error_report(f, net, grid_bits);
  checks.push_back({"lp_bound", report.certified(), fmt(report.measured_lp) + " <= " + fmt(report.theoretical_bound)});

  // Midpoints of the K-cells, then the network against the truncated representation there.
  std::vector<std::vector<double>> points;
  const std::size_t cells = std::size_t{1} << (m.K * f.dimension);
  const std::size_t mask = (std::size_t{1} << m.K) - 1;
  for (std::size_t i = 0; i < cells; ++i) {
    std::vector<double> x(f.dimension);
    for (std::size_t q = 0; q < f.dimension; ++q) {
      const std::size_t l = (i >> (m.K * (f.dimension - 1 - q))) & mask;
      x[q] = (static_cast<double>(l) + 0.5) * std::ldexp(1.0, -static_cast<int>(m.K));
    }
    points.push_back(std::move(x));
  }
  const auto agreement = kasfc::compare_on_good_set(f, net, points);
  checks.push_back({"good_set_agreement", agreement.ok(),
                    std::to_string(agreement.checked) + " points, max deviation " + fmt(agreement.max_deviation) +
                        " <= " + fmt(agreement.tolerance)});
  return checks;
}

void append_csv(const std::string& path, const std::vector<kasfc::ErrorReport>& reports) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for appending");
  if (fresh) out << kasfc::csv_header() << '\n';
  for (const auto& r : reports) out << kasfc::to_csv_row(r) << '\n';
}

int cmd_verify(RunConfig cfg) {
  std::vector<std::size_t> ks;
  std::optional<kasfc::ReluNetwork> loaded;
  if (!cfg.net_file.empty()) {
    loaded.emplace(kasfc::load_network(cfg.net_file));
    const auto& m = loaded->meta();
    if (!m.function.empty()) cfg.function = m.function;
    cfg.d = m.d;
    cfg.p = m.p;
    ks = {m.K};
  } else {
    ks = k_values(cfg);
  }
  const auto f = resolve_function(cfg);

  bool all_ok = true;
  std::vector<kasfc::ErrorReport> reports;
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t K : ks) {
    const kasfc::ReluNetwork net = loaded ? *loaded : kasfc::assemble_full(f, K, cfg.p);
    const std::size_t grid_bits = cfg.grid_bits.value_or(kasfc::default_grid_bits(K, cfg.d));
    kasfc::ErrorReport report;
    const auto checks = certify(f, net, grid_bits, report);
    nlohmann::json entry = {{"function", f.name}, {"d", cfg.d}, {"K", K}, {"p", cfg.p}};
    if (cfg.format == "text") std::cout << "[" << f.name << " d=" << cfg.d << " K=" << K << " p=" << fmt(cfg.p) << "]\n";
    for (const auto& c : checks) {
      all_ok = all_ok && c.passed;
      if (cfg.format == "text") std::cout << "  " << (c.passed ? "pass " : "FAIL ") << c.name << ": " << c.detail << '\n';
      entry["checks"][c.name] = {{"passed", c.passed}, {"detail", c.detail}};
    }
    if (checks.size() > 1) {
      reports.push_back(report);
      if (cfg.format == "csv") std::cout << (reports.size() == 1 ? std::string(kasfc::csv_header()) + "\n" : "") << kasfc::to_csv_row(report) << '\n';
      entry["measured_lp"] = report.measured_lp;
      entry["bound"] = report.theoretical_bound;
      entry["max_weight"] = report.max_weight;
      entry["bad_set_measure"] = report.bad_set_measure.to_string();
      entry["grid_bits"] = report.grid_bits;
    }
    doc.push_back(entry);
  }

  if (reports.size() >= 3) {
    const auto fit = kasfc::rate_fit(reports);
    if (cfg.format == "text") {
      std::cout << "rate_fit slope " << (fit.degenerate ? std::string("degenerate (zero error)") : fmt(fit.slope))
                << " (beta " << fmt(f.beta) << ")\n";
    }
    if (!fit.degenerate) doc.push_back({{"rate_fit_slope", fit.slope}, {"beta", f.beta}});
  }
  if (cfg.format == "json") std::cout << doc.dump(2) << '\n';
  if (!cfg.out.empty()) append_csv(cfg.out, reports);
  if (cfg.format == "text") std::cout << (all_ok ? "certified" : "certification FAILED") << '\n';
  return all_ok ? kExitOk : kExitCertification;
}

int cmd_eval(const std::string& file, const std::vector<double>& point) {
  const auto net = kasfc::load_network(file);
  std::vector<double> a, b;
  const auto y = net.eval(point, a, b);
  for (std::size_t i = 0; i < y.size(); ++i) std::cout << (i ? " " : "") << fmt(y[i]);
  std::cout << '\n';
  return kExitOk;
}

int cmd_registry() {
  std::cout << kasfc::kRegistryVersion << '\n';
  for (const auto& e : kasfc::registry_entries()) {
    std::cout << e.name << (e.kind == kasfc::RegistryKind::Holder ? "  holder   " : "  fixture  ") << e.formula << "  [" << e.smoothness
              << "]\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-filling-curve ReLU network builder and certifier"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_function_flags = [&](CLI::App* sub) {
    sub->add_option("--fn", cfg.function, "Registry function name (see `registry`)");
    sub->add_option("--d", cfg.d, "Input dimension")->check(CLI::PositiveNumber);
    sub->add_option("--p", cfg.p, "L^p exponent (>= 1)");
    sub->add_option("--seed", cfg.seed, "Seed of the random piecewise-constant table (fn=pwc)");
    sub->add_option("--pwc-k", cfg.pwc_k, "Cell resolution of the piecewise-constant table (fn=pwc)")->check(CLI::PositiveNumber);
  };

  auto* build = app.add_subcommand("build", "Assemble a network and write it as JSON");
  add_function_flags(build);
  build->add_option("--K", cfg.K, "Digits per coordinate")->required()->check(CLI::PositiveNumber);
  build->add_option("--out", cfg.out, "Output network file")->required();

  auto* verify = app.add_subcommand("verify", "Run the certification suite and report errors");
  add_function_flags(verify);
  auto* k_opt = verify->add_option("--K", cfg.K, "Digits per coordinate")->check(CLI::PositiveNumber);
  auto* range_opt = verify->add_option("--K-range", cfg.K_range, "Sweep of K values, a..b");
  k_opt->excludes(range_opt);
  verify->add_option("--grid-bits", cfg.grid_bits, "Midpoint grid bits per axis (default K+2, at most 2^24 cells)");
  verify->add_option("--out", cfg.out, "CSV file to append ErrorReport rows to");
  verify->add_option("--format", cfg.format, "Standard output format")->check(CLI::IsMember({"text", "csv", "json"}));
  auto* net_opt = verify->add_option("--net", cfg.net_file, "Verify this network file instead of building one");
  net_opt->excludes(range_opt);

  std::string eval_file;
  std::vector<double> eval_point;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved network at a point");
  eval->add_option("file", eval_file, "Network file")->required();
  eval->add_option("point", eval_point, "Coordinates")->required();

  auto* registry = app.add_subcommand("registry", "List registered functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (eval->parsed()) return cmd_eval(eval_file, eval_point);
    if (registry->parsed()) return cmd_registry();
  } catch (const kasfc::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // ParameterError, ShapeError
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
