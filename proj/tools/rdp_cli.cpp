// rdp: command-line front end for the RDP, DRP, transition and RDH solvers.
//
// Exit codes: 0 ok, 1 usage or input error, 2 non-convergence, 3 no
// transition found. Machine output goes to --out when given, else stdout.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rdp/rdp.hpp"

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kInputError = 1, kNonConvergence = 2, kNoTransition = 3 };

struct CommonFlags {
  std::string source;
  std::string distortion = "auto";
  std::string perception = "w2";
  std::string cost;  // optional perception cost file for w2
  double eps = 0.01;
  int max_iter = 1000;
  double tol = 1e-10;
  bool bits = false;
  std::string out;
};

struct Instance {
  rdp::Distribution p;
  rdp::CostMatrix d;
  rdp::CostMatrix c;  // transport cost used for w2 and tv
  rdp::Perception measure = rdp::Perception::wasserstein;
};

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw rdp::InvalidArgument("expected key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw rdp::InvalidArgument("bad number for " + what + ": '" + s + "'");
  return v;
}

std::vector<double> parse_grid(const std::string& spec, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw rdp::InvalidArgument(what + " must be start:stop:count");
  double count = to_double(parts[2], what + " count");
  if (!(count >= 1.0) || count != std::floor(count)) throw rdp::InvalidArgument(what + " count must be a positive integer");
  return rdp::linspace(to_double(parts[0], what), to_double(parts[1], what), static_cast<std::size_t>(count));
}

rdp::Perception parse_measure(const std::string& s) {
  if (s == "w2") return rdp::Perception::wasserstein;
  if (s == "tv") return rdp::Perception::tv;
  if (s == "kl") return rdp::Perception::kl;
  throw rdp::InvalidArgument("--perception must be w2, tv or kl");
}

Instance load_instance(const CommonFlags& f) {
  Instance inst;
  std::string kind = "file";
  if (f.source.rfind("binary:", 0) == 0) {
    auto kv = parse_kv(f.source.substr(7));
    if (!kv.count("p") || kv.size() != 1) throw rdp::InvalidArgument("binary source needs exactly p=<f>");
    inst.p = rdp::Distribution::bernoulli(to_double(kv["p"], "p"));
    kind = "binary";
  } else if (f.source.rfind("gaussian:", 0) == 0) {
    rdp::GaussianSpec g;
    for (auto& [k, v] : parse_kv(f.source.substr(9))) {
      if (k == "mu") g.mu = to_double(v, k);
      else if (k == "sigma") g.sigma = to_double(v, k);
      else if (k == "S") g.S = to_double(v, k);
      else if (k == "delta") g.delta = to_double(v, k);
      else throw rdp::InvalidArgument("unknown gaussian key '" + k + "'");
    }
    inst.p = rdp::discretize_gaussian(g);
    kind = "gaussian";
  } else if (f.source.rfind("file=", 0) == 0) {
    inst.p = rdp::load_distribution(f.source.substr(5));
  } else {
    throw rdp::InvalidArgument("--source must be binary:p=, gaussian:... or file=<path>");
  }

  const auto& grid = inst.p.support();
  std::string dist = f.distortion;
  if (dist == "auto") dist = kind == "binary" ? "hamming" : "mse";
  if (dist == "hamming") inst.d = rdp::hamming_matrix(inst.p.size(), inst.p.size());
  else if (dist == "mse") inst.d = rdp::squared_error_matrix(grid, grid);
  else if (dist.rfind("file=", 0) == 0) inst.d = rdp::load_cost_matrix(dist.substr(5));
  else throw rdp::InvalidArgument("--distortion must be hamming, mse or file=<path>");
  if (inst.d.rows() != inst.p.size()) throw rdp::DimensionMismatch("distortion rows do not match the source size");

  inst.measure = parse_measure(f.perception);
  if (!f.cost.empty()) {
    inst.c = rdp::load_cost_matrix(f.cost);
  } else if (inst.measure == rdp::Perception::tv) {
    inst.c = rdp::hamming_matrix(inst.d.rows(), inst.d.cols());
  } else if (inst.d.rows() == inst.d.cols()) {
    inst.c = rdp::squared_error_matrix(grid, grid);
  } else {
    throw rdp::InvalidArgument("rectangular distortion needs --cost for the perception transport cost");
  }
  if (inst.c.rows() != inst.d.rows() || inst.c.cols() != inst.d.cols())
    throw rdp::DimensionMismatch("perception cost and distortion differ in shape");
  return inst;
}

rdp::SolverConfig solver_config(const CommonFlags& f) {
  rdp::SolverConfig cfg;
  cfg.max_iter = f.max_iter;
  cfg.residual_tol = f.tol;
  cfg.validate();
  return cfg;
}

// JSON numbers cannot hold non-finite values; those become strings.
rdp::Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void emit(const std::string& text, const std::string& out, const std::string& summary) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw rdp::IoError("cannot write " + out);
  f << text;
  if (!f) throw rdp::IoError("write failed for " + out);
  std::cout << summary << '\n';
}

void emit_json(const rdp::Json& j, const std::string& out, const std::string& summary) {
  emit(j.dump(2) + "\n", out, summary);
}

void add_common(CLI::App* sub, CommonFlags& f, bool with_perception = true) {
  sub->add_option("--source", f.source, "binary:p=<f> | gaussian:mu=,sigma=,S=,delta= | file=<path>")->required();
  sub->add_option("--distortion", f.distortion, "hamming | mse | file=<path> (binary: hamming, else mse)");
  if (with_perception) sub->add_option("--perception", f.perception, "w2 | tv | kl");
  sub->add_option("--cost", f.cost, "perception transport cost matrix file (w2)");
  sub->add_option("--eps", f.eps, "entropic regularization");
  sub->add_option("--max-iter", f.max_iter, "iteration cap");
  sub->add_option("--tol", f.tol, "residual tolerance");
  sub->add_flag("--bits", f.bits, "add fields converted to bits");
  sub->add_option("--out", f.out, "machine-readable output path");
}

rdp::RdpProblem rdp_problem(const Instance& inst, double D, double P, double eps) {
  rdp::RdpProblem prob{inst.p, inst.d, std::nullopt, D, P, eps};
  if (inst.measure == rdp::Perception::wasserstein) prob.c = inst.c;
  return prob;
}

int cmd_solve_rdp(const CommonFlags& f, double D, double P) {
  Instance inst = load_instance(f);
  auto res = rdp::solve_rdp(rdp_problem(inst, D, P, f.eps), inst.measure, solver_config(f));
  rdp::Json j{{"schema_version", kSchemaVersion},
              {"command", "solve-rdp"},
              {"D", D},
              {"P", P},
              {"rate", number(res.rate)},
              {"achieved_D", number(res.achieved_distortion)},
              {"achieved_P", number(res.achieved_perception)},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"residual", number(res.final_residual())}};
  if (f.bits) j["rate_bits"] = number(res.rate / std::log(2.0));
  emit_json(j, f.out, "rate " + fmt(res.rate) + " nats");
  return res.converged ? kOk : kNonConvergence;
}

int cmd_sweep(const CommonFlags& f, const std::string& dgrid, const std::string& pgrid) {
  Instance inst = load_instance(f);
  auto Ds = parse_grid(dgrid, "--D-grid");
  auto Ps = parse_grid(pgrid, "--P-grid");
  auto cfg = solver_config(f);
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << '\n' << "D,P,rate,achieved_D,achieved_P,converged";
  if (f.bits) csv << ",rate_bits";
  csv << '\n';
  std::size_t failed = 0;
  for (double D : Ds)
    for (double P : Ps) {
      double rate = std::numeric_limits<double>::quiet_NaN(), aD = rate, aP = rate;
      bool ok = false;
      try {
        auto res = rdp::solve_rdp(rdp_problem(inst, D, P, f.eps), inst.measure, cfg);
        rate = res.rate;
        aD = res.achieved_distortion;
        aP = res.achieved_perception;
        ok = res.converged;
      } catch (const rdp::InvalidArgument&) {
        throw;
      } catch (const rdp::Error& e) {
        std::cerr << "D=" << D << " P=" << P << ": " << e.what() << '\n';
      }
      if (!ok) ++failed;
      csv << fmt(D) << ',' << fmt(P) << ',' << fmt(rate) << ',' << fmt(aD) << ',' << fmt(aP) << ','
          << (ok ? "true" : "false");
      if (f.bits) csv << ',' << fmt(rate / std::log(2.0));
      csv << '\n';
    }
  emit(csv.str(), f.out,
       std::to_string(Ds.size() * Ps.size()) + " points, " + std::to_string(failed) + " not converged");
  return kOk;
}

rdp::Json transition_json(const rdp::TransitionPoint& tp) {
  return rdp::Json{{"schema_version", kSchemaVersion},
                   {"D", number(tp.D)},
                   {"P", number(tp.P)},
                   {"rate", number(tp.rate)},
                   {"method", rdp::to_string(tp.method)},
                   {"iterations", tp.meta.iterations},
                   {"converged", tp.meta.converged}};
}

// Samples P,D from a CSV with those columns (extra columns and '#' lines ignored).
std::vector<rdp::CurveSample> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rdp::IoError("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<rdp::CurveSample> out;
  auto split = [](const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string x;
    while (std::getline(ss, x, ',')) v.push_back(x);
    return v;
  };
  std::ptrdiff_t ip = -1, id = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (header.empty()) {
      header = cells;
      for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "P") ip = static_cast<std::ptrdiff_t>(k);
        if (header[k] == "D") id = static_cast<std::ptrdiff_t>(k);
      }
      if (ip < 0 || id < 0) throw rdp::FormatError(path + ": header needs P and D columns");
      continue;
    }
    if (cells.size() != header.size()) throw rdp::FormatError(path + ": ragged row");
    rdp::CurveSample s;
    s.abscissa = to_double(cells[ip], "P");
    s.ordinate = to_double(cells[id], "D");
    out.push_back(s);
  }
  return out;
}

int cmd_transition(const CommonFlags& f, const std::string& mode, const std::string& dgrid,
                   const std::string& pgrid, std::optional<double> R, double slope_tol,
                   const std::string& samples_path) {
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << '\n';
  if (mode == "detect" && !samples_path.empty()) {
    auto samples = read_samples(samples_path);
    csv << "P,D\n";
    for (auto& s : samples) csv << fmt(s.abscissa) << ',' << fmt(s.ordinate) << '\n';
    int code = kOk;
    try {
      csv << transition_json(rdp::detect_transition_point(samples, slope_tol)).dump() << '\n';
    } catch (const rdp::NoTransitionFound& e) {
      std::cerr << e.what() << '\n';
      code = kNoTransition;
    }
    emit(csv.str(), f.out, "detect on " + std::to_string(samples.size()) + " samples");
    return code;
  }

  Instance inst = load_instance(f);
  auto cfg = solver_config(f);
  if (mode == "f") {
    if (dgrid.empty()) throw rdp::InvalidArgument("--mode f needs --D-grid");
    auto Ds = parse_grid(dgrid, "--D-grid");
    auto curve = rdp::transition_curve_via_rd(inst.p, inst.d, inst.c, Ds, inst.measure, cfg, f.eps);
    csv << "D,P,rate,converged\n";
    bool all = true;
    for (auto& tp : curve) {
      csv << fmt(tp.D) << ',' << fmt(tp.P) << ',' << fmt(tp.rate) << ',' << (tp.meta.converged ? "true" : "false")
          << '\n';
      all = all && tp.meta.converged;
    }
    emit(csv.str(), f.out, std::to_string(curve.size()) + " f(D) samples");
    return all ? kOk : kNonConvergence;
  }
  if (mode == "h") {
    if (pgrid.empty()) throw rdp::InvalidArgument("--mode h needs --P-grid");
    if (inst.measure == rdp::Perception::kl) throw rdp::InvalidArgument("--mode h needs a transport perception");
    auto Ps = parse_grid(pgrid, "--P-grid");
    auto curve = rdp::upper_bound_h(inst.p, inst.d, inst.c, Ps);
    csv << "D,P\n";
    for (auto& tp : curve) csv << fmt(tp.D) << ',' << fmt(tp.P) << '\n';
    emit(csv.str(), f.out, std::to_string(curve.size()) + " h(P) samples");
    return kOk;
  }
  if (mode == "detect") {
    if (!R || pgrid.empty()) throw rdp::InvalidArgument("--mode detect needs --R and --P-grid (or --samples)");
    if (inst.measure == rdp::Perception::kl) throw rdp::InvalidArgument("--mode detect needs a transport perception");
    auto Ps = parse_grid(pgrid, "--P-grid");
    auto cs = rdp::drp_cross_section(inst.p, inst.d, inst.c, *R, Ps, cfg, f.eps);
    csv << "P,D,rate,converged\n";
    for (auto& s : cs)
      csv << fmt(s.abscissa) << ',' << fmt(s.ordinate) << ',' << fmt(s.meta.rate) << ','
          << (s.meta.converged ? "true" : "false") << '\n';
    int code = kOk;
    try {
      csv << transition_json(rdp::detect_transition_point(cs, slope_tol)).dump() << '\n';
    } catch (const rdp::NoTransitionFound& e) {
      std::cerr << e.what() << '\n';
      code = kNoTransition;
    }
    emit(csv.str(), f.out, "cross-section of " + std::to_string(cs.size()) + " points");
    return code;
  }
  throw rdp::InvalidArgument("--mode must be f, h or detect");
}

int cmd_solve_drp(const CommonFlags& f, double R, double P) {
  Instance inst = load_instance(f);
  if (inst.measure == rdp::Perception::kl) throw rdp::InvalidArgument("solve-drp supports w2 and tv perception");
  auto res = rdp::solve_drp(rdp::DrpProblem{inst.p, inst.d, inst.c, R, P, f.eps}, solver_config(f));
  rdp::Json j{{"schema_version", kSchemaVersion},
              {"command", "solve-drp"},
              {"R", R},
              {"P", P},
              {"distortion", number(res.achieved_distortion)},
              {"achieved_R", number(res.rate)},
              {"achieved_P", number(res.achieved_perception)},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"residual", res.residual_trace.empty() ? rdp::Json(0.0) : number(res.final_residual())}};
  if (f.bits) j["achieved_R_bits"] = number(res.rate / std::log(2.0));
  emit_json(j, f.out, "distortion " + fmt(res.achieved_distortion));
  return res.converged ? kOk : kNonConvergence;
}

int cmd_rdh(const std::string& image, double D, double P, double eps, int max_iter, double tol,
            std::optional<std::uint64_t> seed, const std::string& emit_marked, const std::string& out) {
  if (!emit_marked.empty() && !seed) throw rdp::InvalidArgument("--emit-marked needs --seed");
  auto img = rdp::load_pgm(image);
  auto pe = rdp::prediction_errors(img);
  auto sq = rdp::squared_error_matrix(rdp::symbol_grid(), rdp::symbol_grid());
  rdp::SolverConfig cfg;
  cfg.max_iter = max_iter;
  cfg.residual_tol = tol;
  auto sol = rdp::solve_rdh_rdp(pe.histogram, sq, sq, D, P, eps, cfg);
  rdp::Json j{{"schema_version", kSchemaVersion},
              {"command", "rdh"},
              {"D", D},
              {"P", P},
              {"embedding_rate_nats", number(sol.embedding_rate)},
              {"embedding_rate_bits", number(sol.embedding_rate / std::log(2.0))},
              {"achieved_D", number(sol.achieved_D)},
              {"achieved_P", number(sol.achieved_P)},
              {"iterations", sol.iterations},
              {"converged", sol.converged},
              {"psnr", nullptr}};
  if (seed) {
    auto mk = rdp::simulate_marking(img, sol, seed);
    j["psnr"] = number(mk.psnr);
    j["seed"] = *seed;
    if (!emit_marked.empty()) rdp::save_pgm(mk.marked, emit_marked);
  }
  emit_json(j, out, "embedding rate " + fmt(sol.embedding_rate) + " nats/symbol");
  return sol.converged ? kOk : kNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion-perception solvers"};
  app.require_subcommand(1);

  CommonFlags rf, sf, tf, df;
  double D = 0.0, P = 0.0, R = 0.0;

  auto* solve = app.add_subcommand("solve-rdp", "minimum rate under distortion and perception budgets");
  add_common(solve, rf);
  solve->add_option("--D", D, "distortion budget")->required();
  solve->add_option("--P", P, "perception budget")->required();

  std::string dgrid, pgrid;
  auto* sweep = app.add_subcommand("sweep", "solve-rdp over a D x P grid, CSV output");
  add_common(sweep, sf);
  sweep->add_option("--D-grid", dgrid, "start:stop:count")->required();
  sweep->add_option("--P-grid", pgrid, "start:stop:count")->required();

  std::string mode, samples;
  std::optional<double> tR;
  double slope_tol = 1e-3;
  std::string tdgrid, tpgrid;
  auto* trans = app.add_subcommand("transition", "transition curves f, h and transition detection");
  trans->add_option("--mode", mode, "f | h | detect")->required();
  trans->add_option("--source", tf.source, "binary:p=<f> | gaussian:mu=,sigma=,S=,delta= | file=<path>");
  trans->add_option("--distortion", tf.distortion, "hamming | mse | file=<path>");
  trans->add_option("--perception", tf.perception, "w2 | tv | kl");
  trans->add_option("--cost", tf.cost, "perception transport cost matrix file (w2)");
  trans->add_option("--eps", tf.eps, "entropic regularization");
  trans->add_option("--max-iter", tf.max_iter, "iteration cap");
  trans->add_option("--tol", tf.tol, "residual tolerance");
  trans->add_option("--out", tf.out, "machine-readable output path");
  trans->add_option("--D-grid", tdgrid, "start:stop:count (mode f)");
  trans->add_option("--P-grid", tpgrid, "start:stop:count (modes h, detect)");
  trans->add_option("--R", tR, "rate budget in nats (mode detect)");
  trans->add_option("--slope-tol", slope_tol, "secant slope threshold (mode detect)");
  trans->add_option("--samples", samples, "CSV with P,D columns to run detection on (mode detect)");

  auto* drp = app.add_subcommand("solve-drp", "minimum distortion under rate and perception budgets");
  add_common(drp, df);
  drp->add_option("--R", R, "rate budget in nats")->required();
  drp->add_option("--P", P, "perception budget")->required();

  std::string image, marked, rout;
  double rD = 0.0, rP = 0.0, reps = 0.01, rtol = 1e-10;
  int riter = 1000;
  std::optional<std::uint64_t> seed;
  auto* rdh = app.add_subcommand("rdh", "reversible data hiding analysis of a PGM image");
  rdh->add_option("--image", image, "P2 or P5 PGM, maxval 255")->required();
  rdh->add_option("--D", rD, "distortion budget (squared error)")->required();
  rdh->add_option("--P", rP, "perception budget (squared-error transport)")->required();
  rdh->add_option("--eps", reps, "entropic regularization");
  rdh->add_option("--max-iter", riter, "iteration cap");
  rdh->add_option("--tol", rtol, "residual tolerance");
  rdh->add_option("--seed", seed, "marking generator seed");
  rdh->add_option("--emit-marked", marked, "write the simulated marked image (P5)");
  rdh->add_option("--out", rout, "machine-readable output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) return cmd_solve_rdp(rf, D, P);
    if (*sweep) return cmd_sweep(sf, dgrid, pgrid);
    if (*trans) {
      if (samples.empty() && tf.source.empty()) throw rdp::InvalidArgument("--source is required");
      return cmd_transition(tf, mode, tdgrid, tpgrid, tR, slope_tol, samples);
    }
    if (*drp) return cmd_solve_drp(df, R, P);
    if (*rdh) return cmd_rdh(image, rD, rP, reps, riter, rtol, seed, marked, rout);
  } catch (const rdp::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const rdp::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const rdp::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const rdp::Infeasible& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const rdp::Error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kNonConvergence;
  }
  return kInputError;
}
