// dualmargin: run, compare and certify margin-maximizing solvers on
// sparse-text or CSV datasets, and prepare input files.

#include <dualmargin/dualmargin.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace dualmargin;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct DataOptions {
  std::string path;
  std::string format = "auto";
  bool normalize = true;
  bool multiclass = false;
};

struct SolverOptions {
  std::string method = "alg1";
  std::string loss = "exp";
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::size_t stride = 0;
  double theta = 1.0;
  double eta = 1.0;
  bool momentum = true;
  bool timing = false;
};

struct Problem {
  Dataset ds;
  std::vector<LabeledInput> inputs;  // scaled binary inputs, empty for multiclass
  bool multiclass = false;
};

Problem load_problem(const DataOptions& opt) {
  std::string format = opt.format;
  if (format == "auto") format = opt.path.ends_with(".csv") ? "csv" : "sparse";
  if (format != "csv" && format != "sparse") throw ConfigError("--format must be auto, sparse or csv");

  if (opt.multiclass) {
    if (format != "sparse") throw ConfigError("--multiclass needs the sparse text format");
    const MulticlassProblem mc = load_multiclass_sparse_text(opt.path, opt.normalize);
    return {reduce(mc).binary, {}, true};
  }
  std::vector<LabeledInput> inputs = format == "csv" ? load_csv(opt.path) : load_sparse_text(opt.path);
  Dataset ds = build_dataset(inputs, opt.normalize);
  for (auto& ex : inputs) ex.x /= ds.scale_factor();
  return {std::move(ds), std::move(inputs), false};
}

SolverConfig make_config(const SolverOptions& opt, std::size_t n) {
  SolverConfig cfg;
  cfg.method = parse_method(opt.method);
  if (opt.loss == "exp")
    cfg.loss = Loss::exponential();
  else if (opt.loss == "logistic")
    cfg.loss = Loss::logistic(n);
  else
    throw ConfigError("--loss must be exp or logistic, got '" + opt.loss + "'");
  if (opt.steps < 1) throw ConfigError("--steps must be at least 1");
  if (!(opt.theta > 0.0 && opt.theta <= 1.0)) throw ConfigError("--theta must be in (0, 1]");
  if (!(opt.eta > 0.0)) throw ConfigError("--eta must be positive");
  cfg.schedule = Schedule::with_constant_theta(Schedule::accelerated(), opt.theta);
  cfg.total_steps = opt.steps;
  cfg.seed = opt.seed;
  cfg.stride = opt.stride > 0 ? opt.stride : (opt.steps < 10000 ? 1 : 10);
  cfg.momentum_enabled = opt.momentum;
  cfg.gd_eta = opt.eta;
  cfg.timing = opt.timing;
  validate(cfg);
  return cfg;
}

std::vector<TraceRow> solve(const SolverConfig& cfg, const Problem& problem, const std::string& kernel,
                            double bandwidth) {
  std::vector<TraceRow> rows;
  if (kernel == "none") {
    rows = run(cfg, problem.ds);
  } else {
    Kernel k = kernel == "linear" ? Kernel::linear() : kernel == "rbf" ? Kernel::rbf(bandwidth)
                                                                      : throw ConfigError("--kernel must be none, linear or rbf");
    KernelOracle oracle = problem.inputs.empty() ? KernelOracle(problem.ds, k) : KernelOracle(problem.inputs, k);
    rows = run_kernel(cfg, oracle);
  }
  if (problem.multiclass)
    for (auto& r : rows) r.margin *= std::sqrt(2.0);
  return rows;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string split_trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!split_trim(item).empty()) out.push_back(split_trim(item));
  return out;
}

void add_data_options(CLI::App* app, DataOptions& data) {
  app->add_option("--data", data.path, "dataset file (sparse text or CSV)")->required();
  app->add_option("--format", data.format, "auto, sparse or csv")->capture_default_str();
  app->add_flag("!--no-normalize", data.normalize, "require ||x|| <= 1 instead of rescaling");
  app->add_flag("--multiclass", data.multiclass, "labels in 1..k; run on the flattened reduction");
}

void add_solver_options(CLI::App* app, SolverOptions& s) {
  app->add_option("--loss", s.loss, "exp or logistic")->capture_default_str();
  app->add_option("--steps", s.steps, "iterations")->capture_default_str();
  app->add_option("--seed", s.seed, "sampling seed (alg2)")->capture_default_str();
  app->add_option("--stride", s.stride, "trace every k steps (default 1, or 10 from 10^4 steps)");
  app->add_option("--theta", s.theta, "constant step theta in (0, 1]")->capture_default_str();
  app->add_option("--eta", s.eta, "gd step size")->capture_default_str();
  app->add_flag("!--no-momentum", s.momentum, "alg2 without momentum");
  app->add_flag("--timing", s.timing, "fill wall_ns (output is then not reproducible)");
}

// --- run -------------------------------------------------------------------

int cmd_run(const DataOptions& data, const SolverOptions& solver, const std::string& out, const std::string& kernel,
            double bandwidth) {
  const Problem problem = load_problem(data);
  const SolverConfig cfg = make_config(solver, problem.ds.n());
  const auto rows = solve(cfg, problem, kernel, bandwidth);
  std::ostringstream csv;
  write_trace_csv(csv, rows);
  write_output(out, csv.str());

  std::ostream& log = out.empty() || out == "-" ? std::cerr : std::cout;
  const TraceRow& last = rows.back();
  log << "final margin: " << fmt(last.margin) << " at t=" << last.t << '\n';
  if (!std::isnan(last.cert_upper))
    log << "certificate: [" << fmt(last.cert_lower) << ", " << fmt(last.cert_upper) << "]\n";
  return 0;
}

// --- compare ---------------------------------------------------------------

int cmd_compare(const DataOptions& data, const SolverOptions& solver, const std::string& methods,
                const std::string& out) {
  const Problem problem = load_problem(data);
  const auto names = split_list(methods);
  if (names.empty()) throw ConfigError("--methods is empty");
  std::vector<SolverConfig> configs;
  for (const auto& name : names) {
    SolverOptions o = solver;
    o.method = name;
    configs.push_back(make_config(o, problem.ds.n()));
  }

  try {
    const OracleResult oracle = max_margin_oracle(problem.ds, 1e-6, 200'000);
    if (!oracle.u_bar)
      std::cerr << "warning: data is not linearly separable; margin columns are not meaningful\n";
  } catch (const OracleError&) {
  }

  std::vector<std::future<std::vector<TraceRow>>> jobs;
  for (const auto& cfg : configs)
    jobs.push_back(std::async(std::launch::async, [&problem, cfg] { return solve(cfg, problem, "none", 1.0); }));
  std::vector<std::vector<TraceRow>> traces;
  for (auto& j : jobs) traces.push_back(j.get());

  std::ostringstream csv;
  csv << 't';
  for (const auto& name : names) csv << ",margin_" << name;
  csv << '\n';
  for (std::size_t r = 0; r < traces.front().size(); ++r) {
    csv << traces.front()[r].t;
    for (const auto& tr : traces) csv << ',' << format_double(tr[r].margin);
    csv << '\n';
  }
  write_output(out, csv.str());
  return 0;
}

// --- certify ---------------------------------------------------------------

int cmd_certify(const DataOptions& data, std::size_t steps) {
  const Problem problem = load_problem(data);
  SolverOptions o;
  o.steps = steps;
  SolverConfig cfg = make_config(o, problem.ds.n());
  cfg.stride = steps;
  const TraceRow last = run(cfg, problem.ds).back();
  std::cout << "[" << fmt(last.cert_lower) << ", " << fmt(last.cert_upper) << "]\n";
  std::cout << (last.cert_lower > 0.0 ? "separable" : "not provably separable at this horizon") << '\n';
  return 0;
}

// --- idx2svm ---------------------------------------------------------------

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated IDX header in '" + path + "'");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

int cmd_idx2svm(const std::string& images_path, const std::string& labels_path, const std::string& classes,
                std::size_t limit, const std::string& out) {
  std::ifstream images(images_path, std::ios::binary), labels(labels_path, std::ios::binary);
  if (!images) throw DataError("cannot open '" + images_path + "'");
  if (!labels) throw DataError("cannot open '" + labels_path + "'");
  if (read_be32(images, images_path) != 0x00000803) throw DataError("'" + images_path + "' is not an IDX image file");
  if (read_be32(labels, labels_path) != 0x00000801) throw DataError("'" + labels_path + "' is not an IDX label file");
  const std::uint32_t count = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path), cols = read_be32(images, images_path);
  if (read_be32(labels, labels_path) != count) throw DataError("image and label counts differ");

  std::map<int, int> remap;  // raw class -> output label
  const auto wanted = split_list(classes);
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    int raw = 0;
    try {
      raw = std::stoi(wanted[i]);
    } catch (const std::exception&) {
      throw ConfigError("--classes entry '" + wanted[i] + "' is not an integer");
    }
    remap[raw] = wanted.size() == 2 ? (i == 0 ? 1 : -1) : static_cast<int>(i) + 1;
  }

  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> buf(pixels);
  std::ostringstream text;
  std::size_t written = 0;
  for (std::uint32_t k = 0; k < count && (limit == 0 || written < limit); ++k) {
    char raw_label = 0;
    if (!labels.get(raw_label) || !images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
      throw DataError("IDX files end before record " + std::to_string(k));
    const int cls = static_cast<unsigned char>(raw_label);
    int label = cls + 1;
    if (!remap.empty()) {
      const auto it = remap.find(cls);
      if (it == remap.end()) continue;
      label = it->second;
    }
    Vector x(static_cast<Eigen::Index>(pixels));
    for (std::size_t p = 0; p < pixels; ++p) x[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
    write_sparse_record(text, label, x);
    ++written;
  }
  write_output(out, text.str());
  std::cerr << "wrote " << written << " records of dimension " << pixels << '\n';
  return 0;
}

// --- synth -----------------------------------------------------------------

int cmd_synth(std::size_t n, std::size_t d, double gap, std::uint64_t seed, bool random, const std::string& out) {
  if (n < 1 || d < 1) throw ConfigError("--n and --d must be positive");
  if (!random && !(gap >= 0.0 && gap < 1.0)) throw ConfigError("--gap must be in [0, 1)");
  const auto inputs = random ? synthetic::random_labels(n, d, seed) : synthetic::planted_separable(n, d, gap, seed);
  std::ostringstream text;
  write_sparse_text(text, inputs);
  write_output(out, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Margin maximization with accelerated dual methods"};
  app.require_subcommand(1);

  DataOptions data;
  SolverOptions solver;
  std::string out, kernel = "none", methods = "gd,ngd,alg1,batch_perceptron";
  double bandwidth = 1.0;

  auto* run_cmd = app.add_subcommand("run", "run one method and write a trace CSV");
  add_data_options(run_cmd, data);
  add_solver_options(run_cmd, solver);
  run_cmd->add_option("--method", solver.method, "alg1, alg2, gd, ngd, batch_perceptron, dual_nesterov_primal")
      ->capture_default_str();
  run_cmd->add_option("--out", out, "trace CSV path (default stdout)");
  run_cmd->add_option("--kernel", kernel, "none, linear or rbf (dual-only alg1/alg2)")->capture_default_str();
  run_cmd->add_option("--bandwidth", bandwidth, "rbf bandwidth")->capture_default_str();

  auto* cmp_cmd = app.add_subcommand("compare", "run several methods and write one margin column each");
  add_data_options(cmp_cmd, data);
  add_solver_options(cmp_cmd, solver);
  cmp_cmd->add_option("--methods", methods, "comma-separated method list")->capture_default_str();
  cmp_cmd->add_option("--out", out, "CSV path (default stdout)");

  std::size_t cert_steps = 1000;
  auto* cert_cmd = app.add_subcommand("certify", "bracket the squared maximum margin");
  add_data_options(cert_cmd, data);
  cert_cmd->add_option("--steps", cert_steps, "iterations")->capture_default_str();

  std::string images, labels, classes;
  std::size_t limit = 0;
  auto* idx_cmd = app.add_subcommand("idx2svm", "convert IDX image/label files to sparse text");
  idx_cmd->add_option("--images", images, "IDX image file")->required();
  idx_cmd->add_option("--labels", labels, "IDX label file")->required();
  idx_cmd->add_option("--classes", classes, "keep these classes; two map to +1/-1, more map to 1..k");
  idx_cmd->add_option("--limit", limit, "stop after this many records");
  idx_cmd->add_option("--out", out, "output path (default stdout)");

  std::size_t synth_n = 64, synth_d = 16;
  double gap = 0.05;
  std::uint64_t synth_seed = 7;
  bool random = false;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic labeled dataset");
  synth_cmd->add_option("--n", synth_n, "examples")->capture_default_str();
  synth_cmd->add_option("--d", synth_d, "dimension")->capture_default_str();
  synth_cmd->add_option("--gap", gap, "planted margin")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "seed")->capture_default_str();
  synth_cmd->add_flag("--random-labels", random, "fair random labels instead of a planted separator");
  synth_cmd->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(data, solver, out, kernel, bandwidth);
    if (*cmp_cmd) return cmd_compare(data, solver, methods, out);
    if (*cert_cmd) return cmd_certify(data, cert_steps);
    if (*idx_cmd) return cmd_idx2svm(images, labels, classes, limit, out);
    if (*synth_cmd) return cmd_synth(synth_n, synth_d, gap, synth_seed, random, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
