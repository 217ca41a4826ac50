#include "cisim/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "cisim/dynamics.hpp"
#include "cisim/localization.hpp"
#include "cisim/output.hpp"
#include "cisim/spectra.hpp"

namespace cisim {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidGrid:
    case ErrorCode::CiOnGrid:
      return kExitConfig;
    case ErrorCode::NotConverged:
    case ErrorCode::NoConvergence:
      return kExitNoConvergence;
    default:
      return kExitFailure;
  }
}

namespace {

std::string grid_meta(const GridSpec& g) {
  std::ostringstream os;
  os.precision(17);
  os << g.nx << "x" << g.ny << " x[" << g.x_min << "," << g.x_max << "] y[" << g.y_min << "," << g.y_max
     << "] ci_offset=" << (g.ci_offset_applied ? 1 : 0);
  return os.str();
}

std::string params_meta(const ModelParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "omega1=" << p.omega1 << " omega2=" << p.omega2 << " a=" << p.a << " delta=" << p.delta << " c=" << p.c
     << " gamma=" << p.gamma();
  return os.str();
}

std::string short_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Shared bookkeeping: output directory, task timing/status, manifest.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg) : cfg_(cfg), dir_(cfg.out_dir) {
    manifest_.command = std::move(command);
    manifest_.config = cfg;
    std::filesystem::create_directories(dir_);
  }

  CsvTable table(std::vector<std::string> columns) const {
    CsvTable t(std::move(columns), cfg_.hash());
    t.meta("command", manifest_.command);
    return t;
  }

  void emit(const CsvTable& t, const std::string& name) {
    const std::string checksum = t.write((dir_ / name).string());
    manifest_.files.push_back({name, checksum});
  }

  // Runs one task; failures are recorded and turned into an exit code so
  // later tasks still run.
  void task(const std::string& name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    TaskRecord rec{name, "ok", "", 0.0};
    try {
      body();
    } catch (const Error& e) {
      rec.status = std::string(to_string(e.code()));
      rec.message = e.what();
      code_ = std::max(code_, exit_code_for(e.code()));
      std::cerr << "cisim: " << name << ": " << rec.status << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
      rec.status = "ERROR";
      rec.message = e.what();
      code_ = std::max(code_, kExitFailure);
      std::cerr << "cisim: " << name << ": " << e.what() << "\n";
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.tasks.push_back(rec);
  }

  int finish() {
    manifest_.write((dir_ / "manifest.json").string());
    return code_;
  }

 private:
  const RunConfig& cfg_;
  std::filesystem::path dir_;
  RunManifest manifest_;
  int code_ = kExitOk;
};

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "cisim: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "cisim: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::string kind_name(HamiltonianKind k) { return std::string(to_string(k)); }

}  // namespace

int cmd_eigs(const RunConfig& cfg) {
  return guarded([&] {
    Run run("eigs", cfg);
    const GridSpec g = cfg.make_grid_for(cfg.model);
    for (auto kind : cfg.solver.kinds) {
      run.task("eigs " + kind_name(kind), [&] {
        const auto h = HamiltonianOperator::build(kind, cfg.model, g, cfg.operator_options());
        auto r = lowest_eigenpairs(h, cfg.solver.count, cfg.solver_options());
        resolve_parity(r, kind, cfg.model);
        auto t = run.table({"index", "energy", "residual", "parity", "group"});
        t.meta("kind", kind_name(kind));
        t.meta("params", params_meta(cfg.model));
        t.meta("grid", grid_meta(g));
        t.meta("residual_tol", r.residual_tol);
        t.meta("iterations", static_cast<double>(r.iterations));
        for (std::size_t gi = 0; gi < r.degeneracy_groups.size(); ++gi) {
          for (int k : r.degeneracy_groups[gi]) {
            t.row({static_cast<double>(k), r.eigenvalues[k], r.residual_norms[k],
                   parity_character(r.eigenfields[k], kind, cfg.model), static_cast<double>(gi)});
          }
        }
        run.emit(t, "eigs_" + kind_name(kind) + ".csv");
      });
      if (!cfg.sweep.correlation) continue;
      run.task("correlation " + kind_name(kind), [&] {
        const auto deltas = cfg.delta_grid();
        const auto d = correlation_diagram(kind, cfg.model, deltas, cfg.solver.count, cfg.grid_factory(),
                                           cfg.operator_options(), cfg.solver_options());
        std::vector<std::string> cols{"delta"};
        for (int k = 1; k <= cfg.solver.count; ++k) cols.push_back("E" + std::to_string(k));
        for (int k = 1; k <= cfg.solver.count; ++k) cols.push_back("parity" + std::to_string(k));
        auto t = run.table(cols);
        t.meta("kind", kind_name(kind));
        t.meta("params", params_meta(cfg.model));
        t.meta("columns", "states tracked across delta by eigenfield overlap");
        for (const auto& row : d.rows) {
          std::vector<double> v{row.delta};
          v.insert(v.end(), row.energies.begin(), row.energies.end());
          v.insert(v.end(), row.parities.begin(), row.parities.end());
          t.row(v);
        }
        run.emit(t, "correlation_" + kind_name(kind) + ".csv");
      });
    }
    return run.finish();
  });
}

int cmd_localization(const RunConfig& cfg) {
  return guarded([&] {
    Run run("localization", cfg);
    const GridSpec g = cfg.make_grid_for(cfg.model);
    const auto mask = make_projector(cfg.model, g);
    for (auto kind : cfg.solver.kinds) {
      run.task("localization " + kind_name(kind), [&] {
        const auto h = HamiltonianOperator::build(kind, cfg.model, g, cfg.operator_options());
        auto r = lowest_eigenpairs(h, cfg.solver.count, cfg.solver_options());
        resolve_parity(r, kind, cfg.model);
        auto t = run.table({"index", "energy", "parity", "P", "group", "group_P_max"});
        t.meta("kind", kind_name(kind));
        t.meta("params", params_meta(cfg.model));
        t.meta("grid", grid_meta(g));
        t.meta("x_sep", mask.x_sep);
        t.meta("no_barrier", mask.no_barrier ? "true" : "false");
        for (std::size_t gi = 0; gi < r.degeneracy_groups.size(); ++gi) {
          const auto& group = r.degeneracy_groups[gi];
          const double pmax = group.size() <= 2 ? subspace_localization(r, group, mask).p_max
                                                : std::numeric_limits<double>::quiet_NaN();
          for (int k : group) {
            t.row({static_cast<double>(k), r.eigenvalues[k], parity_character(r.eigenfields[k], kind, cfg.model),
                   localization_P(r.eigenfields[k], mask), static_cast<double>(gi), pmax});
          }
        }
        run.emit(t, "localization_" + kind_name(kind) + ".csv");
      });
    }
    return run.finish();
  });
}

namespace {

CurveOptions curve_options(const RunConfig& cfg) {
  CurveOptions o;
  o.count = cfg.sweep.count;
  o.op = cfg.operator_options();
  o.solver = cfg.solver_options();
  return o;
}

}  // namespace

int cmd_curve(const RunConfig& cfg) {
  return guarded([&] {
    Run run("curve", cfg);
    const auto kind = cfg.sweep.kind;
    std::vector<CurveSample> curve;
    run.task("curve " + kind_name(kind), [&] {
      curve = delocalization_curve(kind, cfg.model, cfg.delta_grid(), cfg.grid_factory(), curve_options(cfg));
      auto t = run.table({"delta", "one_minus_P", "energy", "parity", "sector_gap"});
      t.meta("kind", kind_name(kind));
      t.meta("params", params_meta(cfg.model));
      t.meta("grid", grid_meta(cfg.make_grid_for(cfg.model)));
      for (const auto& s : curve) t.row({s.delta, s.one_minus_p, s.energy, s.parity, s.gap});
      run.emit(t, "curve_" + kind_name(kind) + ".csv");
    });
    if (!curve.empty()) {
      run.task("critical " + kind_name(kind), [&] {
        const auto cp = critical_deltas(curve);
        double gap_delta = std::numeric_limits<double>::quiet_NaN();
        double gap = gap_delta;
        try {
          const auto gm = curve_gap_minimum(curve);
          gap_delta = gm.delta;
          gap = gm.gap;
        } catch (const Error&) {
          // No same-sector partner level in the solves: leave NaN.
        }
        auto t = run.table({"gamma", "delta_inflection", "delta_tangent", "slope", "bandwidth", "delta_min_gap",
                            "min_gap"});
        t.meta("kind", kind_name(kind));
        t.row({cfg.model.gamma(), cp.delta_inflection, cp.delta_tangent, cp.slope, cp.bandwidth, gap_delta, gap});
        run.emit(t, "critical_" + kind_name(kind) + ".csv");
      });
    }
    return run.finish();
  });
}

int cmd_phase_diagram(const RunConfig& cfg) {
  return guarded([&] {
    Run run("phase-diagram", cfg);
    const auto kind = cfg.sweep.kind;
    run.task("phase-diagram " + kind_name(kind), [&] {
      const auto rows =
          phase_diagram(kind, cfg.model, cfg.sweep.gammas, cfg.delta_grid(), cfg.grid_factory(), curve_options(cfg));
      auto t = run.table({"gamma", "delta_inflection", "delta_tangent"});
      t.meta("kind", kind_name(kind));
      t.meta("params", params_meta(cfg.model));
      for (const auto& r : rows) t.row({r.gamma, r.delta_inflection, r.delta_tangent});
      run.emit(t, "phase_diagram_" + kind_name(kind) + ".csv");
      for (const auto& r : rows) {
        auto c = run.table({"delta", "one_minus_P", "energy", "parity", "sector_gap"});
        c.meta("kind", kind_name(kind));
        c.meta("gamma", r.gamma);
        for (const auto& s : r.curve) c.row({s.delta, s.one_minus_p, s.energy, s.parity, s.gap});
        run.emit(c, "curve_" + kind_name(kind) + "_gamma" + short_num(r.gamma) + ".csv");
      }
    });
    return run.finish();
  });
}

int cmd_dynamics(const RunConfig& cfg) {
  return guarded([&] {
    Run run("dynamics", cfg);
    const GridSpec g = cfg.make_grid_for(cfg.model);
    const auto times = cfg.time_grid();
    TraceOptions topt;
    topt.op = cfg.operator_options();
    topt.propagator.tol = cfg.dynamics.tol;
    topt.propagator.seed = cfg.solver.seed;
    topt.gp_dress_initial = cfg.dynamics.gp_dress_initial;
    for (double temp : cfg.dynamics.temperatures) {
      ThermalEnsemble ens;
      bool have = false;
      run.task("ensemble T=" + short_num(temp), [&] {
        ens = donor_boltzmann(cfg.model, g, temp, cfg.dynamics.eps, topt.op, cfg.solver_options());
        have = true;
      });
      if (!have) continue;
      for (auto kind : cfg.dynamics.kinds) {
        run.task("trace " + kind_name(kind) + " T=" + short_num(temp), [&] {
          const auto tr = transfer_trace(kind, cfg.model, g, ens, times, topt);
          auto t = run.table({"t", "P"});
          t.meta("kind", kind_name(kind));
          t.meta("params", params_meta(cfg.model));
          t.meta("temperature", temp);
          t.meta("grid", grid_meta(g));
          t.meta("members", static_cast<double>(tr.members));
          t.meta("max_donor_energy_error", ens.max_energy_error);
          t.meta("propagation_tol", cfg.dynamics.tol);
          t.meta("chebyshev_terms_per_step", static_cast<double>(tr.terms_per_step));
          t.meta("norm_drift", tr.norm_drift);
          t.meta("energy_drift", tr.energy_drift);
          t.meta("gp_dress_initial", cfg.dynamics.gp_dress_initial ? "true" : "false");
          for (std::size_t i = 0; i < tr.times.size(); ++i) t.row({tr.times[i], tr.p_values[i]});
          run.emit(t, "trace_" + kind_name(kind) + "_T" + short_num(temp) + ".csv");
        });
      }
    }
    return run.finish();
  });
}

}  // namespace cisim
