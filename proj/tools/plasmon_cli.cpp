// plasmon: command-line driver for the layered-sphere resonance library.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "plasmon/np_operator.hpp"
#include "plasmon/report.hpp"

using namespace plasmon;

namespace {

enum Exit { ok = 0, usage = 2, io = 3, empty = 4, numerical = 5 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return io;
    case ErrorKind::empty_result: return empty;
    case ErrorKind::singular_system:
    case ErrorKind::divergent_integral:
    case ErrorKind::undefined_dissipation:
    case ErrorKind::accuracy:
    case ErrorKind::pole:
    case ErrorKind::singularity:
    case ErrorKind::invariant_violation:
    case ErrorKind::witness_degeneracy:
    case ErrorKind::empty_kernel:
    case ErrorKind::zero_mean: return numerical;
    default: return usage;
  }
}

int report_error(const std::string& kind, const std::string& message, int code, double value = 0.0) {
  json e = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (value != 0.0) e["value"] = value;
  std::cerr << e.dump() << std::endl;
  return code;
}

std::string row(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
  return s + "\n";
}

struct Material {
  double lambda = 1.0, mu = 1.0;
  LameParams params() const {
    LameParams p{lambda, mu};
    p.validate();
    return p;
  }
};

void add_material(CLI::App* sc, Material& m) {
  sc->add_option("--lambda", m.lambda, "Lame lambda")->capture_default_str();
  sc->add_option("--mu", m.mu, "Lame mu")->capture_default_str();
}

// Config plus command-line overrides.
struct RunArgs {
  std::string config;
  std::optional<std::string> csv, svg;
  std::optional<double> delta;
  int threads = 0;
};

void add_run(CLI::App* sc, RunArgs& a, bool outputs) {
  sc->add_option("--config", a.config, "JSON run configuration")->required();
  sc->add_option("--threads", a.threads, "worker threads (0: PLASMON_THREADS or hardware)");
  if (outputs) {
    sc->add_option("--csv", a.csv, "CSV output path (default: config, else stdout)");
    sc->add_option("--svg", a.svg, "SVG plot path");
  } else {
    sc->add_option("--delta", a.delta, "loss parameter (default: first entry of delta_list)");
  }
}

int cmd_constants(int n, int n_last, const Material& m) {
  const auto p = m.params();
  std::cout << "n,lambda,mu,zeta1,zeta2,zeta3\n";
  for (int k = n; k <= std::max(n, n_last); ++k) {
    const auto z = plasmon_constants(p, k);
    std::cout << row({std::to_string(k), fmt17(p.lambda), fmt17(p.mu), fmt17(z.zeta1), fmt17(z.zeta2), fmt17(z.zeta3)});
  }
  return ok;
}

int cmd_kernels(int n, const Material& m) {
  const auto p = m.params();
  const auto z = plasmon_constants(p, n);
  std::cout << "n,family,c,dimension,expected,sigma_null,sigma_next,norm\n";
  for (int f = 1; f <= 3; ++f) {
    const auto P = assemble_H(n, p, z[f]);
    const int dim = int(plasmon_kernel_family(n, f, p).size());
    const int want = family_multiplicity(n, f);
    const auto& s = P.singular_values;
    const int K = int(s.size());
    std::cout << row({std::to_string(n), std::to_string(f), fmt17(z[f]), std::to_string(dim), std::to_string(want),
                      fmt17(s[K - want]), fmt17(s[K - want - 1]), fmt17(P.norm())});
  }
  return ok;
}

int cmd_waves(int n_max, double R, int exactness, const Material& m) {
  const auto p = m.params();
  const auto quad = build_quadrature(exactness > 0 ? exactness : 2 * n_max + 12);
  std::cout << "n,family,k,c,lame_inside,lame_outside,continuity,transmission,t1,t3,gram_error\n";
  for (int n = 2; n <= n_max; ++n) {
    std::vector<CMat> all;
    for (int f = 1; f <= 3; ++f)
      for (const auto& G : plasmon_kernel_family(n, f, p)) all.push_back(G);
    double gram = 0.0;
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = 0; b < all.size(); ++b)
        gram = std::max(gram, std::abs(frobenius(all[a], all[b]) - (a == b ? 1.0 : 0.0)));
    for (int f = 1; f <= 3; ++f) {
      const auto K = plasmon_kernel_family(n, f, p);
      for (std::size_t k = 0; k < K.size(); ++k) {
        const auto w = perfect_wave(K[k], f, R, p, int(k));
        const auto r = check_perfect_wave(w, p, quad);
        std::cout << row({std::to_string(n), std::to_string(f), std::to_string(k), fmt17(w.c), fmt17(r.lame_inside),
                          fmt17(r.lame_outside), fmt17(r.continuity), fmt17(r.transmission), fmt17(r.t1), fmt17(r.t3),
                          fmt17(gram)});
      }
    }
  }
  return ok;
}

int cmd_np(double R, int n_max, int exactness, const Material& m) {
  const auto p = m.params();
  const auto quad = build_quadrature(exactness > 0 ? exactness : 2 * n_max + 4);
  const auto spec = np_galerkin_spectrum(R, p, n_max, quad);
  struct Target {
    int n, family;
    double value;
  };
  std::vector<Target> targets;
  for (int n = 2; n <= n_max; ++n) {
    const auto z = plasmon_constants(p, n);
    for (int f = 1; f <= 3; ++f) targets.push_back({n, f, np_eigenvalue_map(z[f])});
  }
  std::cout << "index,eigenvalue,imag,degree,J,target,target_n,target_family,abs_diff\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& e = spec[i];
    const Target* best = nullptr;
    for (const auto& t : targets)
      if (!best || std::abs(e.value - t.value) < std::abs(e.value - best->value)) best = &t;
    if (best)
      std::cout << row({std::to_string(i), fmt17(e.value), fmt17(e.imag), std::to_string(e.degree), std::to_string(e.J),
                        fmt17(best->value), std::to_string(best->n), std::to_string(best->family),
                        fmt17(std::abs(e.value - best->value))});
    else
      std::cout << row({std::to_string(i), fmt17(e.value), fmt17(e.imag), std::to_string(e.degree), std::to_string(e.J),
                        "", "", "", ""});
  }
  return ok;
}

struct Point {
  RunConfig cfg;
  double delta;
  int n_delta;
  LayeredMedium medium;
  SourceSpec source;
};

Point point_of(const RunArgs& a) {
  Point pt{load_config(a.config), 0.0, 2, {}, {}};
  pt.delta = a.delta.value_or(pt.cfg.delta_list.front());
  if (!(pt.delta > 0)) fail(ErrorKind::validation, "delta must be positive", pt.delta);
  const Scenario& sc = pt.cfg.scenario;
  if (sc.scheduled()) pt.n_delta = schedule_n_delta(sc.R, pt.delta).n;
  if (pt.n_delta > pt.cfg.n_max) fail(ErrorKind::unsupported_degree, "scheduled degree exceeds n_max", pt.n_delta);
  pt.medium = sc.medium_at(pt.delta, pt.n_delta);
  pt.source = sc.source_at(pt.n_delta);
  return pt;
}

json point_json(const Point& pt) {
  json j = {{"delta", pt.delta}, {"c", pt.medium.c}};
  if (pt.cfg.scenario.scheduled()) j["n_delta"] = pt.n_delta;
  return j;
}

int cmd_solve(const RunArgs& a) {
  const Point pt = point_of(a);
  const auto sols = solve(pt.medium, pt.source, a.threads);
  const auto d = dissipation_E(sols, pt.medium, pt.source);
  const auto res = residual_check(sols, pt.source);
  const auto quad = build_quadrature(std::max(pt.cfg.quadrature_exactness, 2 * pt.source.max_degree() + 2));
  json j = point_json(pt);
  j["E_delta"] = d.E;
  j["E_via_source"] = d.via_source;
  j["E_via_imag"] = d.via_imag;
  const cd sq = source_pairing_quadrature(pt.source, fields_of(sols), quad);
  j["source_pairing_quadrature"] = {sq.real(), sq.imag()};
  json modes = json::array();
  for (const auto& s : sols) modes.push_back({{"n", s.mode.n}, {"family", s.mode.family}, {"k", s.mode.k}});
  j["modes"] = modes;
  j["residuals"] = {{"lame", res.lame}, {"continuity", res.continuity}, {"traction", res.traction},
                    {"source_jump", res.source_jump}};
  std::cout << j.dump(2) << "\n";
  return ok;
}

int cmd_witness(const RunArgs& a) {
  const Point pt = point_of(a);
  const Scenario& sc = pt.cfg.scenario;
  const double E = dissipation_E(solve(pt.medium, pt.source, a.threads), pt.medium, pt.source).E;
  const auto up = upper_witness(sc, pt.medium, pt.source, pt.n_delta);
  const auto lo = lower_witness(sc, pt.medium, pt.source, pt.n_delta);
  json j = point_json(pt);
  j["E_delta"] = E;
  j["upper"] = {{"kind", up.kind}, {"I", up.I}, {"residual", up.residual}, {"tau", up.tau}};
  j["lower"] = {{"kind", lo.kind}, {"J", lo.J}, {"residual", lo.residual}, {"tau", lo.tau}};
  EnergyReport r;
  r.E_delta = E;
  r.I_upper = up.I;
  r.J_lower = lo.J;
  j["sandwich_holds"] = r.sandwich_holds(pt.cfg.thresholds.sandwich_slack);
  std::cout << j.dump(2) << "\n";
  return ok;
}

int cmd_sweep(const RunArgs& a) {
  RunConfig cfg = load_config(a.config);
  OutputPaths paths = cfg.output;
  if (a.csv) paths.csv = a.csv;
  if (a.svg) paths.svg = a.svg;
  const auto res = sweep(cfg.scenario, cfg.delta_list, cfg.thresholds, cfg.witnesses, a.threads);
  const std::string csv = emit_report(res, cfg, paths);
  if (!paths.csv) std::cout << csv;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered-sphere elastic plasmon resonance driver"};
  app.require_subcommand(1);

  Material mat;
  int n = 2, n_last = 0, n_max = 4, exactness = 0;
  double R = 1.0;
  RunArgs run;

  auto* c = app.add_subcommand("constants", "plasmon constants zeta_1..3 for degree n");
  c->add_option("--n", n, "degree (>= 2)")->capture_default_str();
  c->add_option("--n-last", n_last, "print degrees n..n-last");
  add_material(c, mat);

  auto* k = app.add_subcommand("kernels", "kernel dimensions of H at each constant");
  k->add_option("--n", n, "degree (>= 2)")->capture_default_str();
  add_material(k, mat);

  auto* w = app.add_subcommand("waves-check", "residuals of every perfect wave up to --nmax");
  w->add_option("--nmax", n_max, "highest degree")->capture_default_str();
  w->add_option("--R", R, "shell radius")->capture_default_str();
  w->add_option("--exactness", exactness, "sphere quadrature exactness (0: automatic)");
  add_material(w, mat);

  auto* np = app.add_subcommand("np-spectrum", "Galerkin spectrum of the Neumann-Poincare operator");
  np->add_option("--R", R, "sphere radius")->capture_default_str();
  np->add_option("--nmax", n_max, "highest density degree")->capture_default_str();
  np->add_option("--exactness", exactness, "sphere quadrature exactness (0: 2 nmax + 4)");
  add_material(np, mat);

  auto* so = app.add_subcommand("solve", "exact transmission solve at one delta");
  add_run(so, run, false);
  auto* wi = app.add_subcommand("witness", "primal and dual witnesses at one delta");
  add_run(wi, run, false);
  auto* sw = app.add_subcommand("sweep", "delta sweep with verdict");
  add_run(sw, run, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), usage);
  }

  try {
    if (c->parsed()) return cmd_constants(n, n_last, mat);
    if (k->parsed()) return cmd_kernels(n, mat);
    if (w->parsed()) return cmd_waves(n_max, R, exactness, mat);
    if (np->parsed()) return cmd_np(R, n_max, exactness, mat);
    if (so->parsed()) return cmd_solve(run);
    if (wi->parsed()) return cmd_witness(run);
    if (sw->parsed()) return cmd_sweep(run);
  } catch (const Error& e) {
    return report_error(kind_name(e.kind()), e.what(), exit_code(e.kind()), e.value());
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), numerical);
  }
  return usage;
}
