#ifndef SPECPERTURB_CLI_HPP
#define SPECPERTURB_CLI_HPP

// Command line front end. `run` parses arguments, executes one subcommand
// and returns the exit status: 0 success, 1 usage or input error, 2
// numerical failure. Every run records its fully resolved configuration in
// a manifest: inside report.json for commands that write one, otherwise in
// <output>.manifest.json next to the output file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specperturb/affinity.hpp"
#include "specperturb/bounds.hpp"
#include "specperturb/completion.hpp"
#include "specperturb/embedding.hpp"
#include "specperturb/experiments.hpp"
#include "specperturb/io.hpp"
#include "specperturb/sensing.hpp"
#include "specperturb/subspace.hpp"
#include "specperturb/synthgen.hpp"

namespace specperturb::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw InvalidArgument("empty item in list '" + s + "'");
    out.push_back(item);
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

inline double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse '" + s + "' as a number");
  }
  if (used != s.size() || !std::isfinite(v)) throw InvalidArgument("cannot parse '" + s + "' as a number");
  return v;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    const double v = to_real(item);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument("'" + item + "' is not an integer");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// Comma list whose items are numbers or ranges: a..b (step 1), a..b/s
/// (step s) or a..b*f (multiply by f). Ranges include b when reached.
inline std::vector<double> parse_range(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_real(item));
      continue;
    }
    const double lo = to_real(item.substr(0, dots));
    std::string rest = item.substr(dots + 2);
    double step = 1.0;
    bool geometric = false;
    if (auto p = rest.find_first_of("/*"); p != std::string::npos) {
      geometric = rest[p] == '*';
      step = to_real(rest.substr(p + 1));
      rest = rest.substr(0, p);
    }
    const double hi = to_real(rest);
    if (hi < lo) throw InvalidArgument("range '" + item + "' is empty");
    if (geometric ? !(step > 1.0 && lo > 0.0) : !(step > 0.0))
      throw InvalidArgument("range '" + item + "' has a bad step");
    for (double v = lo; v <= hi * (1.0 + 1e-12); v = geometric ? v * step : v + step) {
      out.push_back(v);
      if (out.size() > 100000) throw InvalidArgument("range '" + item + "' is too long");
    }
  }
  return out;
}

inline std::optional<double> parse_sigma(const std::string& s) {
  if (s == "median") return std::nullopt;
  const double v = to_real(s);
  if (!(v > 0.0)) throw InvalidArgument("--sigma must be positive or 'median'");
  return v;
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json report_list(const std::vector<BoundReport>& reports) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(r.to_json());
  return a;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_manifest_beside(const std::string& output, const json& manifest) {
  io::write_atomic(output + ".manifest.json", dump(manifest));
}

inline json report_document(const json& manifest, const json& reports, const json& summary, const json& rho) {
  json doc;
  doc["manifest"] = manifest;
  doc["reports"] = reports;
  doc["embedding_summary"] = summary;
  doc["rho"] = rho;
  return doc;
}

inline json embedding_json(const SpectralEmbedding& e) {
  json j;
  j["k"] = e.k;
  j["drop_first"] = e.drop_first;
  j["eigenvalues"] = vector_json(e.eigenvalues);
  j["alpha"] = e.alpha ? json(*e.alpha) : json(nullptr);
  const Eigen::Index head = std::min<Eigen::Index>(e.spectrum.size(), e.k + 5);
  j["spectrum_head"] = vector_json(e.spectrum.head(head));
  return j;
}

inline json comparison_json(const SubspaceComparison& c) {
  json j;
  j["k"] = c.k;
  j["angles"] = vector_json(c.angles);
  j["max_angle"] = c.max_angle;
  j["sin_theta_fro"] = c.sin_theta_fro;
  j["proj_dist_fro"] = c.proj_dist_fro;
  j["embed_dist_2"] = c.embed_dist_2;
  j["max_row_dist"] = c.max_row_dist;
  json q = json::array();
  for (Eigen::Index i = 0; i < c.Q.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index jj = 0; jj < c.Q.cols(); ++jj) row.push_back(c.Q(i, jj));
    q.push_back(row);
  }
  j["Q"] = q;
  return j;
}

inline json sweep_rows_json(const std::vector<SweepRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back({{"parameter", r.parameter}, {"mean", r.mean}, {"std", r.std}, {"trials", r.trials}});
  return a;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "parameter,mean,std,trials\n";
  for (const auto& r : rows)
    s += io::format_double(r.parameter) + ',' + io::format_double(r.mean) + ',' + io::format_double(r.std) + ',' +
         std::to_string(r.trials) + '\n';
  return s;
}

inline DataMatrix load_data(const std::string& path, const std::string& labels_path) {
  DataMatrix d;
  d.X = io::read_matrix(path);
  if (!labels_path.empty()) {
    d.labels = io::read_labels(labels_path);
    if (static_cast<Eigen::Index>(d.labels->size()) != d.X.rows())
      throw InvalidArgument(labels_path + ": " + std::to_string(d.labels->size()) + " labels for " +
                            std::to_string(d.X.rows()) + " rows in " + path);
  }
  d.validate();
  return d;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(what + ": shapes differ (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Option holders, one per subcommand family.

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string output;
};

struct GenOptions {
  std::string sizes;
  double eps = 0.1;
  std::string labels_out;
  int points = 100;
  int dim = 100;
  int sparsity = 3;
  int rank = 3;
  int clusters = 2;
  double noise = 0.1;
  double separation = 1.0;
  int inflate = 0;
  double inflate_scale = 0.0;
  double inflate_decay = 1.0;
  std::optional<std::uint64_t> basis_seed;
  std::optional<std::uint64_t> point_seed;
};

struct ClusterOptions {
  std::string input;
  std::string affinity;
  std::string labels;
  std::string sigma = "median";
  int k = 2;
  int restarts = 20;
  int max_iter = 300;
  bool drop_first = true;
  bool row_normalize = false;
};

struct CompletionOptions {
  int lambda_steps = 10;
  double lambda_final_ratio = 1e-4;
  double tol = 1e-6;
  int max_iter = 500;
  int power_iters = 1;

  SoftImputeOptions resolve() const {
    SoftImputeOptions o;
    o.lambda_steps = lambda_steps;
    o.lambda_final_ratio = lambda_final_ratio;
    o.tol = tol;
    o.max_iter = max_iter;
    o.power_iters = power_iters;
    return o;
  }

  json to_json() const {
    return {{"lambda_steps", lambda_steps}, {"lambda_final_ratio", lambda_final_ratio}, {"tol", tol},
            {"max_iter", max_iter}, {"power_iters", power_iters}};
  }
};

inline void add_completion_options(CLI::App* app, CompletionOptions& c) {
  app->add_option("--lambda-steps", c.lambda_steps, "Number of lambda values")->capture_default_str();
  app->add_option("--lambda-final-ratio", c.lambda_final_ratio, "Last lambda as a fraction of sigma_1")
      ->capture_default_str();
  app->add_option("--tol", c.tol, "Relative change tolerance")->capture_default_str();
  app->add_option("--max-iter", c.max_iter, "Iterations per lambda")->capture_default_str();
  app->add_option("--power-iters", c.power_iters, "Subspace iterations per SVT step")->capture_default_str();
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the exit status.

inline int cmd_gen_blocks(const CommonOptions& c, const GenOptions& g, std::ostream& out) {
  BlockAffinitySpec spec{detail::parse_int_list(g.sizes), g.eps, c.seed};
  const BlockAffinity b = block_affinity(spec);
  io::write_matrix(c.output, b.W);
  if (!g.labels_out.empty()) io::write_labels(g.labels_out, b.labels);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "gen blocks"},
         {"sizes", spec.block_sizes}, {"eps", spec.eps}, {"seed", c.seed},
         {"output", c.output}, {"labels", g.labels_out.empty() ? json(nullptr) : json(g.labels_out)}};
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " (" << b.W.rows() << "x" << b.W.cols() << ")\n";
  return 0;
}

inline int cmd_gen_sparse(const CommonOptions& c, const GenOptions& g, std::ostream& out) {
  SparseCloudSpec spec;
  spec.N = g.points;
  spec.n = g.dim;
  spec.s = g.sparsity;
  spec.k = g.clusters;
  spec.noise = g.noise;
  spec.basis_seed = g.basis_seed.value_or(stream_seed(c.seed, Stream::Basis));
  spec.point_seed = g.point_seed.value_or(stream_seed(c.seed, Stream::Points));
  const DataMatrix d = sparse_cloud(spec);
  io::write_matrix(c.output, d.X);
  if (!g.labels_out.empty()) io::write_labels(g.labels_out, *d.labels);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "gen sparse"},
         {"points", spec.N}, {"dim", spec.n}, {"sparsity", spec.s}, {"clusters", spec.k}, {"noise", spec.noise},
         {"seed", c.seed}, {"basis_seed", spec.basis_seed}, {"point_seed", spec.point_seed},
         {"output", c.output}, {"labels", g.labels_out.empty() ? json(nullptr) : json(g.labels_out)}};
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " (" << d.X.rows() << "x" << d.X.cols() << ")\n";
  return 0;
}

inline LowRankSpec lowrank_spec_from(const GenOptions& g, std::uint64_t seed) {
  LowRankSpec spec;
  spec.N = g.points;
  spec.n = g.dim;
  spec.r = g.rank;
  spec.k = g.clusters;
  spec.noise = g.noise;
  spec.separation = g.separation;
  spec.seed = seed;
  spec.inflate = g.inflate;
  spec.inflate_scale = g.inflate_scale;
  spec.inflate_decay = g.inflate_decay;
  return spec;
}

inline json lowrank_json(const LowRankSpec& s) {
  return {{"points", s.N}, {"dim", s.n}, {"rank", s.r}, {"clusters", s.k}, {"noise", s.noise},
          {"separation", s.separation}, {"inflate", s.inflate}, {"inflate_scale", s.inflate_scale},
          {"inflate_decay", s.inflate_decay}};
}

inline int cmd_gen_lowrank(const CommonOptions& c, const GenOptions& g, std::ostream& out) {
  const LowRankSpec spec = lowrank_spec_from(g, c.seed);
  const DataMatrix d = lowrank_images(spec);
  io::write_matrix(c.output, d.X);
  if (!g.labels_out.empty()) io::write_labels(g.labels_out, *d.labels);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "gen lowrank"}};
  m.update(lowrank_json(spec));
  m["seed"] = c.seed;
  m["output"] = c.output;
  m["labels"] = g.labels_out.empty() ? json(nullptr) : json(g.labels_out);
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " (" << d.X.rows() << "x" << d.X.cols() << ")\n";
  return 0;
}

inline int cmd_cluster(const CommonOptions& c, const ClusterOptions& o, std::ostream& out) {
  if (o.input.empty() == o.affinity.empty()) throw InvalidArgument("cluster: give exactly one of -i or --affinity");
  PipelineOptions popts;
  popts.drop_first = o.drop_first;
  popts.row_normalize = o.row_normalize;
  popts.kmeans.restarts = o.restarts;
  popts.kmeans.max_iter = o.max_iter;
  SeededRng rng(c.seed);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "cluster"},
         {"input", o.input.empty() ? json(nullptr) : json(o.input)},
         {"affinity", o.affinity.empty() ? json(nullptr) : json(o.affinity)},
         {"labels", o.labels.empty() ? json(nullptr) : json(o.labels)}, {"k", o.k}, {"seed", c.seed},
         {"restarts", o.restarts}, {"max_iter", o.max_iter}, {"drop_first", o.drop_first},
         {"row_normalize", o.row_normalize}};

  SpectralEmbedding emb;
  ClusterAssignment assign;
  std::optional<double> rho;
  if (!o.input.empty()) {
    const DataMatrix d = detail::load_data(o.input, o.labels);
    const PipelineResult r = cluster_pipeline(d, detail::parse_sigma(o.sigma), o.k, rng, popts);
    m["sigma"] = r.sigma;
    m["sigma_rule"] = o.sigma == "median" ? "median" : "given";
    emb = r.embedding;
    assign = r.assignment;
    rho = r.rho;
  } else {
    const Matrix W = io::read_matrix(o.affinity);
    const AffinityPack pack = normalize_affinity(W);
    require(o.k >= 1 && o.k + (o.drop_first ? 1 : 0) <= W.rows(), "cluster: k out of range");
    emb = specperturb::detail::embed_columns(pack, o.k, o.drop_first, Solver::Auto);
    const Matrix coords = o.row_normalize ? normalize_rows(emb.Vk) : emb.Vk;
    assign = kmeans(coords, o.k, rng, popts.kmeans.restarts, popts.kmeans);
    if (!o.labels.empty()) {
      const std::vector<int> ref = io::read_labels(o.labels);
      require(static_cast<Eigen::Index>(ref.size()) == W.rows(), "cluster: label count does not match W");
      rho = misclassification_rate(assign.labels, ref);
    }
    m["sigma"] = nullptr;
    m["sigma_rule"] = "affinity given";
  }
  const std::filesystem::path dir(c.output);
  io::write_matrix(dir / "embedding.csv", emb.Vk);
  io::write_labels(dir / "labels.csv", assign.labels);
  json summary = detail::embedding_json(emb);
  summary["wcss"] = assign.wcss;
  summary["kmeans_iterations"] = assign.iterations;
  io::write_atomic(dir / "report.json",
                   detail::dump(detail::report_document(m, json::array(), summary, rho ? json(*rho) : json(nullptr))));
  out << "wrote " << (dir / "report.json").string();
  if (rho) out << " rho=" << *rho;
  out << "\n";
  return 0;
}

inline int cmd_compress(const CommonOptions& c, const std::string& input, int m_rows, std::ostream& out) {
  const Matrix X = io::read_matrix(input);
  require(m_rows >= 1, "compress: -m must be positive");
  const auto op = MeasurementOperator::gaussian(static_cast<std::size_t>(m_rows), static_cast<std::size_t>(X.cols()),
                                                c.seed);
  const Matrix Y = measure(X, op);
  io::write_matrix(c.output, Y);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "compress"}, {"input", input},
         {"operator", {{"kind", "gaussian"}, {"m", op.m()}, {"n", op.n()}, {"seed", op.seed()},
                       {"scale", "1/sqrt(m)"}}},
         {"output", c.output}};
  if (X.rows() >= 2) {
    try {
      m["delta_emp"] = rip_delta_between(X, Y).delta_emp;
    } catch (const NumericalError&) {
      m["delta_emp"] = nullptr;
    }
  }
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " (" << Y.rows() << "x" << Y.cols() << ")\n";
  return 0;
}

struct CompleteOptions {
  std::string observed;
  std::string full;
  std::optional<Eigen::Index> rows;
  std::optional<Eigen::Index> cols;
  double p = 0.1;
  std::string mask_out;
  CompletionOptions solver;
};

inline int cmd_complete(const CommonOptions& c, const CompleteOptions& o, std::ostream& out) {
  if (o.observed.empty() == o.full.empty()) throw InvalidArgument("complete: give exactly one of -i or --full");
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "complete"}};
  PartialMatrix pm;
  std::optional<Matrix> truth;
  if (!o.observed.empty()) {
    pm = io::read_partial(o.observed, o.rows, o.cols);
    m["input"] = o.observed;
  } else {
    truth = io::read_matrix(o.full);
    SeededRng rng(c.seed);
    pm = observe(*truth, sample_mask(truth->rows(), truth->cols(), o.p, rng));
    m["full"] = o.full;
    m["p"] = o.p;
    m["seed"] = c.seed;
    if (!o.mask_out.empty()) io::write_partial(o.mask_out, pm);
  }
  pm.validate();
  m["rows"] = pm.mask.rows;
  m["cols"] = pm.mask.cols;
  m["observed_fraction"] = pm.mask.p();
  m["solver"] = o.solver.to_json();
  const CompletionResult r = soft_impute(pm, o.solver.resolve());
  io::write_matrix(c.output, r.Xhat);
  m["output"] = c.output;
  json res{{"iterations", r.iterations}, {"lambda_final", r.lambda_final},
           {"observed_residual", r.observed_residual}, {"converged", r.converged}, {"rank", r.rank},
           {"stage_residuals", r.stage_residuals}, {"stage_iterations", r.stage_iterations},
           {"delta_interpretation", "solver residual on observed entries"}};
  if (truth) {
    const double gamma = (*truth - r.Xhat).norm();
    res["gamma_emp"] = gamma;
    res["relative_error"] = truth->norm() > 0.0 ? gamma / truth->norm() : 0.0;
  }
  m["result"] = res;
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " iterations=" << r.iterations << (r.converged ? "" : " (not converged)") << "\n";
  return 0;
}

struct CompareOptions {
  std::string a;
  std::string b;
  bool bases = false;
  int k = 2;
  std::string sigma = "median";
  bool drop_first = false;
};

inline int cmd_compare(const CommonOptions& c, const CompareOptions& o, std::ostream& out) {
  const Matrix A = io::read_matrix(o.a);
  const Matrix B = io::read_matrix(o.b);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "compare"}, {"a", o.a}, {"b", o.b},
         {"bases", o.bases}};
  Matrix V, Vt;
  if (o.bases) {
    detail::require_same_shape(A, B, "compare");
    V = A;
    Vt = B;
  } else {
    require(A.rows() == B.rows(), "compare: data files must have the same number of rows");
    const double sigma = detail::parse_sigma(o.sigma).value_or(median_sigma(A));
    m["sigma"] = sigma;
    m["sigma_rule"] = o.sigma == "median" ? "median of first input" : "given";
    m["k"] = o.k;
    m["drop_first"] = o.drop_first;
    V = spectral_embed(perturbed_affinity(A, sigma), o.k, o.drop_first).Vk;
    Vt = spectral_embed(perturbed_affinity(B, sigma), o.k, o.drop_first).Vk;
  }
  const SubspaceComparison cmp = compare_subspaces(V, Vt);
  io::write_atomic(c.output, detail::dump(detail::report_document(m, json::array(), detail::comparison_json(cmp),
                                                                  nullptr)));
  out << "wrote " << c.output << " max_angle=" << cmp.max_angle << "\n";
  return 0;
}

struct VerifyOptions {
  std::string input;
  std::string perturbed;
  std::string affinity;
  std::string perturbed_affinity;
  std::string sizes;
  double eps = 0.1;
  std::string sigma = "median";
  int k = 2;
  double slack = 10.0;
  int m = 0;
  std::string completed;
  double p = 0.1;
  std::optional<double> p_observed;
  std::optional<double> delta;
  bool strict = false;
  CompletionOptions solver;
};

/// Clean and perturbed affinity packs for the eigenvector checks.
inline std::pair<AffinityPack, AffinityPack> verify_packs(const CommonOptions& c, const VerifyOptions& o, json& m) {
  const int sources = static_cast<int>(!o.input.empty()) + static_cast<int>(!o.affinity.empty()) +
                      static_cast<int>(!o.sizes.empty());
  if (sources != 1) throw InvalidArgument("verify: give exactly one of -i, --affinity or --sizes");
  if (!o.sizes.empty()) {
    BlockAffinitySpec spec{detail::parse_int_list(o.sizes), o.eps, c.seed};
    BlockAffinitySpec clean = spec;
    clean.eps = 0.0;
    m["sizes"] = spec.block_sizes;
    m["eps"] = spec.eps;
    m["seed"] = c.seed;
    return {normalize_affinity(block_affinity(clean).W), normalize_affinity(block_affinity(spec).W)};
  }
  if (!o.affinity.empty()) {
    if (o.perturbed_affinity.empty()) throw InvalidArgument("verify: --affinity needs --perturbed-affinity");
    const Matrix W = io::read_matrix(o.affinity);
    const Matrix Wt = io::read_matrix(o.perturbed_affinity);
    detail::require_same_shape(W, Wt, "verify");
    m["affinity"] = o.affinity;
    m["perturbed_affinity"] = o.perturbed_affinity;
    return {normalize_affinity(W), normalize_affinity(Wt)};
  }
  if (o.perturbed.empty()) throw InvalidArgument("verify: -i needs --perturbed");
  const Matrix X = io::read_matrix(o.input);
  const Matrix Xt = io::read_matrix(o.perturbed);
  require(X.rows() == Xt.rows(), "verify: inputs must have the same number of rows");
  const double sigma = detail::parse_sigma(o.sigma).value_or(median_sigma(X));
  m["input"] = o.input;
  m["perturbed"] = o.perturbed;
  m["sigma"] = sigma;
  return {perturbed_affinity(X, sigma), perturbed_affinity(Xt, sigma)};
}

inline int finish_verify(const CommonOptions& c, const VerifyOptions& o, json m,
                         const std::vector<BoundReport>& reports, std::ostream& out) {
  m["strict"] = o.strict;
  io::write_atomic(c.output, detail::dump(detail::report_document(m, detail::report_list(reports), nullptr, nullptr)));
  bool all_ok = true;
  bool all_verifiable = true;
  for (const auto& r : reports) {
    out << r.theorem << ": lhs=" << r.lhs << " rhs=" << r.rhs << (r.satisfied ? " satisfied" : " NOT satisfied")
        << (r.verifiable ? "" : " (unverifiable)") << "\n";
    all_ok = all_ok && r.satisfied;
    all_verifiable = all_verifiable && r.verifiable;
  }
  if (o.strict && !all_verifiable) throw NumericalError("verify: hypotheses of the bound do not hold (gap collapsed)");
  if (o.strict && !all_ok) throw NumericalError("verify: bound violated");
  return 0;
}

inline int cmd_verify_spectral(const std::string& which, const CommonOptions& c, const VerifyOptions& o,
                               std::ostream& out) {
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "verify " + which}};
  const auto [a, at] = verify_packs(c, o, m);
  std::vector<BoundReport> reports;
  if (which == "stewart") {
    m["slack_factor"] = o.slack;
    reports.push_back(check_stewart(a, at, o.slack));
  } else if (which == "sintheta") {
    m["k"] = o.k;
    auto [r1, r2] = check_sin_theta(a, at, o.k);
    reports = {r1, r2};
  } else {
    m["k"] = o.k;
    auto [r1, r2] = check_embedding(a, at, o.k);
    reports = {r1, r2};
  }
  return finish_verify(c, o, m, reports, out);
}

inline int cmd_verify_cs(const CommonOptions& c, const VerifyOptions& o, std::ostream& out) {
  if (o.input.empty()) throw InvalidArgument("verify cs: -i is required");
  if (o.m < 1) throw InvalidArgument("verify cs: -m must be positive");
  const Matrix X = io::read_matrix(o.input);
  const double sigma = detail::parse_sigma(o.sigma).value_or(median_sigma(X));
  const auto op = MeasurementOperator::gaussian(static_cast<std::size_t>(o.m), static_cast<std::size_t>(X.cols()),
                                                c.seed);
  auto [r1, r2] = check_cs_affinity(X, op, sigma);
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "verify cs"}, {"input", o.input},
         {"sigma", sigma}, {"m", o.m}, {"seed", c.seed}};
  return finish_verify(c, o, m, {r1, r2}, out);
}

inline int cmd_verify_mc(const CommonOptions& c, const VerifyOptions& o, std::ostream& out) {
  if (o.input.empty()) throw InvalidArgument("verify mc: -i is required");
  const Matrix X = io::read_matrix(o.input);
  const double sigma = detail::parse_sigma(o.sigma).value_or(median_sigma(X));
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "verify mc"}, {"input", o.input},
         {"sigma", sigma}};
  Matrix Xhat;
  std::optional<CompletionContext> theory;
  if (!o.completed.empty()) {
    Xhat = io::read_matrix(o.completed);
    detail::require_same_shape(X, Xhat, "verify mc");
    m["completed"] = o.completed;
    if (o.p_observed && o.delta) theory = CompletionContext{*o.p_observed, *o.delta};
  } else {
    SeededRng rng(c.seed);
    const PartialMatrix pm = observe(X, sample_mask(X.rows(), X.cols(), o.p, rng));
    const CompletionResult r = soft_impute(pm, o.solver.resolve());
    Xhat = r.Xhat;
    m["p"] = o.p;
    m["seed"] = c.seed;
    m["solver"] = o.solver.to_json();
    m["converged"] = r.converged;
    theory = CompletionContext{pm.mask.p(), o.delta.value_or(r.observed_residual)};
    m["delta_interpretation"] = o.delta ? "given" : "solver residual on observed entries";
  }
  return finish_verify(c, o, m, {check_mc_affinity(X, Xhat, sigma, theory)}, out);
}

struct SweepOptions {
  std::string values;
  int trials = 0;  // 0 means the per-kind default
  double p = -1.0;
  bool embed = false;
  GenOptions data;
  CompletionOptions solver;
  bool points_set = false;
};

inline int cmd_sweep(const std::string& kind, const CommonOptions& c, SweepOptions o, CLI::App* sub,
                     std::ostream& out) {
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  json m{{"tool", "specperturb"}, {"version", kVersion}, {"command", "sweep " + kind}, {"base_seed", c.seed}};
  std::vector<SweepRow> rows;
  // Sweep completions stop at a coarser lambda with fewer iterations than
  // `complete`, keeping a full curve within minutes.
  if (!given("--lambda-final-ratio")) o.solver.lambda_final_ratio = 0.05;
  if (!given("--max-iter")) o.solver.max_iter = 50;

  if (kind == "measurements") {
    MeasurementSweepConfig cfg;
    cfg.embed_mode = o.embed;
    cfg.cloud.N = given("--points") ? o.data.points : (o.embed ? 1000 : 150);
    cfg.cloud.n = given("--dim") ? o.data.dim : (o.embed ? 1000 : 1024);
    cfg.cloud.s = given("--sparsity") ? o.data.sparsity : (o.embed ? 100 : 10);
    cfg.cloud.k = given("--clusters") ? o.data.clusters : 3;
    cfg.cloud.noise = given("--noise") ? o.data.noise : (o.embed ? 0.5 : 1.5);
    cfg.p = o.p > 0.0 ? o.p : (o.embed ? 0.1 : 1.0);
    cfg.trials = o.trials > 0 ? o.trials : (o.embed ? 3 : 20);
    cfg.base_seed = c.seed;
    cfg.completion = o.solver.resolve();
    const std::string values = o.values.empty() ? (o.embed ? "4..512*2,1000" : "8..1024*2") : o.values;
    for (double v : detail::parse_range(values)) {
      if (v != std::floor(v) || v < 1) throw InvalidArgument("sweep measurements: m values must be positive integers");
      cfg.m_values.push_back(static_cast<int>(v));
    }
    rows = measurement_sweep(cfg);
    m["family"] = "sparse";
    m["points"] = cfg.cloud.N;
    m["dim"] = cfg.cloud.n;
    m["sparsity"] = cfg.cloud.s;
    m["clusters"] = cfg.cloud.k;
    m["noise"] = cfg.cloud.noise;
    m["p"] = cfg.p;
    m["metric"] = o.embed ? "embed_dist_2" : "rho";
    m["values"] = values;
    m["trials"] = cfg.trials;
  } else {
    CompletionSweepConfig cfg;
    GenOptions g = o.data;
    if (!given("--points")) g.points = 1000;
    if (!given("--dim")) g.dim = 500;
    if (!given("--clusters")) g.clusters = 3;
    if (kind == "rank" && !given("--inflate-scale")) g.inflate_scale = 0.5;
    cfg.data = lowrank_spec_from(g, 0);
    cfg.trials = o.trials > 0 ? o.trials : 2;
    cfg.base_seed = c.seed;
    cfg.completion = o.solver.resolve();
    std::string values = o.values;
    if (kind == "rank") {
      cfg.p = o.p > 0.0 ? o.p : 0.1;
      if (values.empty()) values = "3..30/3";
      for (double v : detail::parse_range(values)) {
        if (v != std::floor(v)) throw InvalidArgument("sweep rank: ranks must be integers");
        cfg.ranks.push_back(static_cast<int>(v));
      }
      rows = rank_sweep(cfg);
      m["p"] = cfg.p;
    } else {
      if (values.empty()) values = "0.05,0.1,0.2,0.4";
      cfg.fractions = detail::parse_range(values);
      rows = fraction_sweep(cfg);
    }
    m["family"] = "lowrank";
    m.update(lowrank_json(cfg.data));
    m.erase("inflate");
    m["metric"] = "rho";
    m["values"] = values;
    m["trials"] = cfg.trials;
  }
  m["solver"] = o.solver.to_json();
  m["output"] = c.output;
  m["curve"] = detail::sweep_rows_json(rows);
  io::write_atomic(c.output, detail::sweep_csv(rows));
  detail::write_manifest_beside(c.output, m);
  out << "wrote " << c.output << " (" << rows.size() << " rows)\n";
  return 0;
}

// ---------------------------------------------------------------------------

/// Parses `args` (program name excluded) and runs the selected subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Spectral clustering under compressed, completed and noisy perturbations", "specperturb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;
  GenOptions gen;
  ClusterOptions cluster;
  CompleteOptions complete;
  CompareOptions compare;
  VerifyOptions verify;
  SweepOptions sweep;
  std::string compress_input;
  int compress_m = 0;

  auto add_seed = [&](CLI::App* a) { a->add_option("--seed", common.seed, "Random seed")->capture_default_str(); };
  auto add_output = [&](CLI::App* a, const char* what) { a->add_option("-o,--output", common.output, what)->required(); };

  // gen
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate synthetic instances");
  gen_cmd->require_subcommand(1);
  CLI::App* gen_blocks = gen_cmd->add_subcommand("blocks", "Block affinity W plus uniform noise");
  gen_blocks->add_option("--sizes", gen.sizes, "Comma-separated block sizes")->required();
  gen_blocks->add_option("--eps", gen.eps, "Noise amplitude")->capture_default_str();
  CLI::App* gen_sparse = gen_cmd->add_subcommand("sparse", "Points sparse in a random orthogonal basis");
  gen_sparse->add_option("-s,--sparsity", gen.sparsity, "Nonzeros per point")->capture_default_str();
  gen_sparse->add_option("--basis-seed", gen.basis_seed, "Seed of the basis (default derived from --seed)");
  gen_sparse->add_option("--point-seed", gen.point_seed, "Seed of the points (default derived from --seed)");
  CLI::App* gen_lowrank = gen_cmd->add_subcommand("lowrank", "Clustered rows in a rank-r subspace");
  gen_lowrank->add_option("-r,--rank", gen.rank, "Rank of the clean data")->capture_default_str();
  gen_lowrank->add_option("--separation", gen.separation, "Distance scale between cluster centres")->capture_default_str();
  gen_lowrank->add_option("--inflate", gen.inflate, "Extra directions beyond rank r")->capture_default_str();
  gen_lowrank->add_option("--inflate-scale", gen.inflate_scale, "Magnitude of the first extra direction")
      ->capture_default_str();
  gen_lowrank->add_option("--inflate-decay", gen.inflate_decay, "Geometric decay of extra directions")
      ->capture_default_str();
  for (CLI::App* a : {gen_sparse, gen_lowrank}) {
    a->add_option("-N,--points", gen.points, "Number of points")->capture_default_str();
    a->add_option("-n,--dim", gen.dim, "Ambient dimension")->capture_default_str();
    a->add_option("-k,--clusters", gen.clusters, "Number of clusters")->capture_default_str();
    a->add_option("--noise", gen.noise, "Noise level")->capture_default_str();
  }
  for (CLI::App* a : {gen_blocks, gen_sparse, gen_lowrank}) {
    add_seed(a);
    add_output(a, "Matrix CSV to write");
    a->add_option("--labels", gen.labels_out, "Labels CSV to write");
  }

  // cluster
  CLI::App* cluster_cmd = app.add_subcommand("cluster", "Spectral clustering of data or a given affinity");
  cluster_cmd->add_option("-i,--input", cluster.input, "Data CSV (rows are points)");
  cluster_cmd->add_option("--affinity", cluster.affinity, "Weight matrix CSV instead of data");
  cluster_cmd->add_option("--labels", cluster.labels, "Ground-truth labels CSV");
  cluster_cmd->add_option("--sigma", cluster.sigma, "Kernel width or 'median'")->capture_default_str();
  cluster_cmd->add_option("-k,--clusters", cluster.k, "Number of clusters")->capture_default_str();
  cluster_cmd->add_option("--restarts", cluster.restarts, "k-means restarts")->capture_default_str();
  cluster_cmd->add_option("--kmeans-iter", cluster.max_iter, "Lloyd iterations per restart")->capture_default_str();
  cluster_cmd->add_flag("--drop-first,!--keep-first", cluster.drop_first,
                        "Embed with eigenvectors 2..k+1 (default) or 1..k");
  cluster_cmd->add_flag("--row-normalize", cluster.row_normalize, "Unit-length embedding rows before k-means");
  add_seed(cluster_cmd);
  add_output(cluster_cmd, "Output directory");

  // compress
  CLI::App* compress_cmd = app.add_subcommand("compress", "Gaussian measurements of each row");
  compress_cmd->add_option("-i,--input", compress_input, "Data CSV")->required();
  compress_cmd->add_option("-m,--measurements", compress_m, "Number of measurements")->required();
  add_seed(compress_cmd);
  add_output(compress_cmd, "Measured data CSV");

  // complete
  CLI::App* complete_cmd = app.add_subcommand("complete", "Soft-impute matrix completion");
  complete_cmd->add_option("-i,--input", complete.observed, "Observed row,col,value CSV");
  complete_cmd->add_option("--rows", complete.rows, "Row count (default: largest index + 1)");
  complete_cmd->add_option("--cols", complete.cols, "Column count (default: largest index + 1)");
  complete_cmd->add_option("--full", complete.full, "Full matrix CSV to subsample");
  complete_cmd->add_option("-p,--fraction", complete.p, "Observed fraction with --full")->capture_default_str();
  complete_cmd->add_option("--mask-out", complete.mask_out, "Write the sampled observations here");
  add_completion_options(complete_cmd, complete.solver);
  add_seed(complete_cmd);
  add_output(complete_cmd, "Completed matrix CSV");

  // compare
  CLI::App* compare_cmd = app.add_subcommand("compare", "Canonical angles and Procrustes distances");
  compare_cmd->add_option("-a", compare.a, "First data (or basis) CSV")->required();
  compare_cmd->add_option("-b", compare.b, "Second data (or basis) CSV")->required();
  compare_cmd->add_flag("--bases", compare.bases, "Inputs are orthonormal bases, not data");
  compare_cmd->add_option("-k,--clusters", compare.k, "Embedding dimension")->capture_default_str();
  compare_cmd->add_option("--sigma", compare.sigma, "Kernel width or 'median'")->capture_default_str();
  compare_cmd->add_flag("--drop-first", compare.drop_first, "Skip the leading eigenvector");
  add_seed(compare_cmd);
  add_output(compare_cmd, "Report JSON");

  // verify
  CLI::App* verify_cmd = app.add_subcommand("verify", "Evaluate a perturbation bound");
  verify_cmd->require_subcommand(1);
  std::vector<std::pair<std::string, CLI::App*>> verifiers;
  for (const char* name : {"stewart", "sintheta", "embed", "cs", "mc"}) {
    CLI::App* v = verify_cmd->add_subcommand(name, std::string("Check the ") + name + " bound");
    v->add_option("-i,--input", verify.input, "Clean data CSV");
    v->add_option("--sigma", verify.sigma, "Kernel width or 'median' (of the clean data)")->capture_default_str();
    v->add_flag("--strict", verify.strict, "Exit 2 unless every report is verifiable and satisfied");
    add_seed(v);
    add_output(v, "Report JSON");
    verifiers.emplace_back(name, v);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CLI::App* v = verifiers[i].second;
    v->add_option("--perturbed", verify.perturbed, "Perturbed data CSV");
    v->add_option("--affinity", verify.affinity, "Clean weight matrix CSV");
    v->add_option("--perturbed-affinity", verify.perturbed_affinity, "Perturbed weight matrix CSV");
    v->add_option("--sizes", verify.sizes, "Generate block affinities with these sizes");
    v->add_option("--eps", verify.eps, "Noise amplitude with --sizes")->capture_default_str();
  }
  verifiers[0].second->add_option("--slack", verify.slack, "Constant on |E|_2^2")->capture_default_str();
  verifiers[1].second->add_option("-k", verify.k, "Subspace dimension")->capture_default_str();
  verifiers[2].second->add_option("-k", verify.k, "Subspace dimension")->capture_default_str();
  verifiers[3].second->add_option("-m,--measurements", verify.m, "Number of measurements")->required();
  CLI::App* mc = verifiers[4].second;
  mc->add_option("--completed", verify.completed, "Completed data CSV");
  mc->add_option("-p,--fraction", verify.p, "Observed fraction when completing here")->capture_default_str();
  mc->add_option("--p-observed", verify.p_observed, "Observed fraction behind --completed");
  mc->add_option("--delta", verify.delta, "Observed-entry noise level");
  add_completion_options(mc, verify.solver);

  // sweep
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Seed-averaged curves");
  sweep_cmd->require_subcommand(1);
  std::vector<std::pair<std::string, CLI::App*>> sweeps;
  for (const char* name : {"measurements", "rank", "fraction"}) {
    CLI::App* s = sweep_cmd->add_subcommand(name, std::string("Sweep over ") + name);
    s->add_option("--values", sweep.values, "Range: list of numbers, a..b, a..b/step or a..b*factor");
    s->add_option("--trials", sweep.trials, "Trials per value");
    s->add_option("-N,--points", sweep.data.points, "Number of points");
    s->add_option("-n,--dim", sweep.data.dim, "Ambient dimension");
    s->add_option("-k,--clusters", sweep.data.clusters, "Number of clusters");
    s->add_option("--noise", sweep.data.noise, "Noise level");
    s->add_option("-p,--fraction", sweep.p, "Observed fraction");
    add_completion_options(s, sweep.solver);
    add_seed(s);
    add_output(s, "Curve CSV");
    sweeps.emplace_back(name, s);
  }
  sweeps[0].second->add_option("-s,--sparsity", sweep.data.sparsity, "Nonzeros per point");
  sweeps[0].second->add_flag("--embed", sweep.embed, "Report |V~_k - V_k Q|_2 instead of rho");
  for (std::size_t i = 1; i < 3; ++i) {
    CLI::App* s = sweeps[i].second;
    s->add_option("-r,--rank", sweep.data.rank, "Base rank")->capture_default_str();
    s->add_option("--separation", sweep.data.separation, "Distance scale between cluster centres");
    s->add_option("--inflate-scale", sweep.data.inflate_scale, "Magnitude of extra directions");
    s->add_option("--inflate-decay", sweep.data.inflate_decay, "Geometric decay of extra directions");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (gen_blocks->parsed()) return cmd_gen_blocks(common, gen, out);
    if (gen_sparse->parsed()) return cmd_gen_sparse(common, gen, out);
    if (gen_lowrank->parsed()) return cmd_gen_lowrank(common, gen, out);
    if (cluster_cmd->parsed()) return cmd_cluster(common, cluster, out);
    if (compress_cmd->parsed()) return cmd_compress(common, compress_input, compress_m, out);
    if (complete_cmd->parsed()) return cmd_complete(common, complete, out);
    if (compare_cmd->parsed()) return cmd_compare(common, compare, out);
    for (const auto& [name, v] : verifiers) {
      if (!v->parsed()) continue;
      if (name == "cs") return cmd_verify_cs(common, verify, out);
      if (name == "mc") return cmd_verify_mc(common, verify, out);
      return cmd_verify_spectral(name, common, verify, out);
    }
    for (const auto& [name, s] : sweeps)
      if (s->parsed()) return cmd_sweep(name, common, sweep, s, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no command\n";
  return 1;
}

}  // namespace specperturb::cli

#endif  // SPECPERTURB_CLI_HPP
