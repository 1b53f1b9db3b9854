#include "wickmps/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"

#include "wickmps/channel.hpp"
#include "wickmps/io.hpp"

namespace wickmps::cli {

namespace {

struct Globals {
  std::uint64_t seed = 42;
  double tol_deg = kDefaultDegeneracyTol;
  double tol_zero = 1e-10;
  int json_indent = 2;
  unsigned threads = 1;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(Complex z) { return "(" + fmt(z.real()) + ", " + fmt(z.imag()) + ")"; }

/// Writes to `path`, or to the output stream when no path was given.
void emit(const io::Json& j, const std::string& path, const Globals& g, Streams& s) {
  if (path.empty()) {
    s.out << io::dump(j, g.json_indent);
  } else {
    io::write_file(path, j, g.json_indent);
  }
}

/// Human-readable lines go to stdout unless stdout carries the JSON payload.
std::ostream& report_stream(const std::string& path, Streams& s) {
  return path.empty() ? s.err : s.out;
}

Matrix shift_hermitian(Eigen::Index q) {
  Matrix x = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i + 1 < q; ++i) x(i, i + 1) = x(i + 1, i) = 1.0;
  return x;
}

Matrix staggered_diagonal(Eigen::Index q) {
  Matrix z = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i < q; ++i) z(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
  return z;
}

io::StateFile generate_mps(const Globals& g, Eigen::Index d, Eigen::Index q) {
  io::StateFile f;
  f.kind = SystemKind::discrete;
  f.mps = random_generic_mps(g.seed, d, q);
  auto rng = make_rng(g.seed, std::uint64_t{1} << 32);
  f.local_operators = {{0, Matrix::Identity(q, q)},
                       {1, shift_hermitian(q)},
                       {2, staggered_diagonal(q)},
                       {3, random_hermitian(rng, q)}};
  for (const auto& [label, o] : f.local_operators) f.operators.push_back(operator_matrix(f.mps, o, label));
  return f;
}

io::StateFile generate_cmps(const Globals& g, Eigen::Index d) {
  io::StateFile f;
  f.kind = SystemKind::continuous;
  f.cmps = random_generic_cmps(g.seed, d);
  f.operators.push_back({0, Matrix::Identity(d * d, d * d), OperatorKind::cmps_custom});
  f.operators.push_back(cmps_operator_matrix(f.cmps, OperatorKind::cmps_psi_dagger, 1));
  f.operators.push_back(cmps_operator_matrix(f.cmps, OperatorKind::cmps_psi, 2));
  f.operators.push_back(cmps_operator_matrix(f.cmps, OperatorKind::cmps_density, 3));
  return f;
}

void print_spectrum(std::ostream& os, const SpectralDecomposition& s, double tol) {
  const auto rep = genericity_check(s, tol);
  os << "eigenvalues:";
  for (Eigen::Index k = 0; k < s.size(); ++k) os << ' ' << fmt(s.eigenvalues(k));
  os << "\ngeneric: " << (rep.pass ? "yes" : "no") << "  min_gap: " << fmt(rep.min_gap)
     << "  leading_margin: " << fmt(rep.leading_margin) << '\n';
}

CorrelationWindow discrete_window(std::optional<std::size_t> n_max, Eigen::Index d) {
  return CorrelationWindow::discrete(n_max.value_or(static_cast<std::size_t>(4 * d * d)));
}

/// Continuous grid step: a number, or "auto" for a pilot-based choice.
double resolve_step(const std::string& step, const TransferSystem& sys, std::span<const int> labels,
                    Eigen::Index d, const Globals& g) {
  if (step != "auto") {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(step, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != step.size() || !(v > 0.0)) {
      throw Error(ErrorKind::MalformedInput, "--step must be a positive number or 'auto'");
    }
    return v;
  }
  const int pilot_labels[] = {labels.back(), labels.front()};
  const auto pilot = correlation_table(sys, pilot_labels, CorrelationWindow::continuous(0.05, 64), g.threads);
  PencilOptions opts;
  opts.window_factor = 0;
  return suggest_grid_step(extract_poles(pilot, 0, d, opts));
}

Eigen::Index bond_dim_of(const TransferSystem& sys) {
  return static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(sys.generator.rows()))));
}

std::vector<CorrelationTable> read_tables(const std::vector<std::string>& paths) {
  std::vector<CorrelationTable> tables;
  for (const auto& p : paths) tables.push_back(io::table_from_json(io::read_file(p)));
  return tables;
}

PoleSet poles_from_spectrum(SystemKind kind, const Vector& spectrum) {
  PoleSet ps;
  ps.kind = kind;
  ps.poles = spectrum;
  ps.confidence.assign(static_cast<std::size_t>(spectrum.size()), 1.0);
  ps.leading = 0;
  ps.requested = static_cast<std::size_t>(spectrum.size());
  return ps;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::GenericityFailure:
      return kGeneration;
    case ErrorKind::DegenerateSpectrum:
    case ErrorKind::DegenerateZero:
      return kDegenerate;
    case ErrorKind::ZeroCoefficient:
      return kZeroCoefficient;
    case ErrorKind::MalformedInput:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::UnknownKind:
      return kUsage;
    default:
      return kFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Streams s{out, err};
  Globals g;
  CLI::App app{"Correlation functions, pole fitting and reconstruction for (c)MPS", "wickmps"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--tol-deg", g.tol_deg, "Relative eigenvalue degeneracy tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol-zero", g.tol_zero, "Relative structural-zero threshold")
      ->check(CLI::PositiveNumber);
  app.add_option("--json-indent", g.json_indent, "JSON indent (-1 for compact)");
  app.add_option("--threads", g.threads, "Worker threads for table evaluation")
      ->check(CLI::Range(1u, 256u));

  std::function<int()> action;
  std::string out_path;
  auto add_out = [&](CLI::App* sub) { sub->add_option("-o,--out", out_path, "Output file (default stdout)"); };

  // gen
  std::string gen_kind = "mps";
  Eigen::Index gen_d = 2;
  Eigen::Index gen_q = 2;
  auto* gen = app.add_subcommand("gen", "Generate a random generic state or Lindblad spec");
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"mps", "cmps", "lindblad"}));
  gen->add_option("--d", gen_d, "Bond dimension")->check(CLI::PositiveNumber);
  gen->add_option("--q", gen_q, "Physical dimension (mps)")->check(CLI::Range(2, 64));
  add_out(gen);
  gen->callback([&] {
    action = [&] {
      std::ostream& rep = report_stream(out_path, s);
      if (gen_kind == "lindblad") {
        const LindbladSpec spec = random_lindblad_spec(g.seed, gen_d);
        emit(io::to_json(spec), out_path, g, s);
        rep << "kind: lindblad  d: " << gen_d << "\ntrace_preservation: "
            << fmt(check_trace_preservation(lindblad_generator(spec))) << '\n';
        return int{kOk};
      }
      const io::StateFile f = gen_kind == "mps" ? generate_mps(g, gen_d, gen_q) : generate_cmps(g, gen_d);
      const TransferSystem sys = f.system();
      emit(io::to_json(f), out_path, g, s);
      rep << "kind: " << gen_kind << "  d: " << gen_d;
      if (gen_kind == "mps") rep << "  q: " << gen_q;
      rep << '\n';
      print_spectrum(rep, eig(sys.generator, ordering_for(sys.kind), {g.tol_deg, true}), g.tol_deg);
      if (gen_kind == "cmps") rep << "trace_preservation: " << fmt(check_trace_preservation(sys.generator)) << '\n';
      return int{kOk};
    };
  });

  // correlate
  std::string state_path;
  std::vector<int> labels;
  std::optional<std::size_t> n_max;
  std::string step = "auto";
  std::size_t points = 64;
  auto* correlate = app.add_subcommand("correlate", "Tabulate an N-point correlator on a gap grid");
  correlate->add_option("--state", state_path)->required()->check(CLI::ExistingFile);
  correlate->add_option("--labels", labels, "Operator labels j_1 .. j_N (j_1 at the origin)")
      ->required()
      ->delimiter(',');
  correlate->add_option("--n-max", n_max, "Largest discrete gap (default 4 d^2)");
  correlate->add_option("--step", step, "Continuous grid step or 'auto'");
  correlate->add_option("--points", points, "Continuous points per axis")->check(CLI::Range(2, 100000));
  add_out(correlate);
  correlate->callback([&] {
    action = [&] {
      if (labels.size() < 2) throw Error(ErrorKind::MalformedInput, "need at least two labels");
      const TransferSystem sys = io::state_from_json(io::read_file(state_path)).system();
      const Eigen::Index d = bond_dim_of(sys);
      const CorrelationWindow w =
          sys.kind == SystemKind::discrete
              ? discrete_window(n_max, d)
              : CorrelationWindow::continuous(resolve_step(step, sys, labels, d, g), points);
      emit(io::to_json(correlation_table(sys, labels, w, g.threads)), out_path, g, s);
      return int{kOk};
    };
  });

  // certify
  std::vector<std::string> table_paths;
  Eigen::Index bond_dim = 0;
  auto* certify = app.add_subcommand("certify", "p-number certificate from correlation tables");
  certify->add_option("--tables", table_paths)->required()->check(CLI::ExistingFile);
  certify->add_option("--d", bond_dim, "Claimed bond dimension")->required()->check(CLI::PositiveNumber);
  add_out(certify);
  certify->callback([&] {
    action = [&] {
      const auto tables = read_tables(table_paths);
      CertifyOptions opts;
      opts.structural_zero = g.tol_zero;
      opts.residues.structural_zero = g.tol_zero;
      const auto cert = p_number(tables, bond_dim, opts);
      emit(io::to_json(cert), out_path, g, s);
      std::ostream& rep = report_stream(out_path, s);
      if (!cert.p) {
        rep << "p: infinite  missing_poles: " << cert.missing_poles << '\n';
        return int{kInfiniteP};
      }
      rep << "p: " << *cert.p << '\n';
      return int{kOk};
    };
  });

  // fit-poles
  std::string table_path;
  std::optional<std::size_t> axis;
  auto* fit_poles = app.add_subcommand("fit-poles", "Matrix-pencil pole extraction");
  fit_poles->add_option("--table", table_path)->required()->check(CLI::ExistingFile);
  fit_poles->add_option("--d", bond_dim)->required()->check(CLI::PositiveNumber);
  fit_poles->add_option("--axis", axis, "Single axis (default: all axes merged)");
  add_out(fit_poles);
  fit_poles->callback([&] {
    action = [&] {
      const auto table = io::table_from_json(io::read_file(table_path));
      PoleSet ps;
      if (axis) {
        if (*axis >= table.values.rank()) throw Error(ErrorKind::MalformedInput, "--axis out of range");
        ps = extract_poles(table, *axis, bond_dim);
      } else {
        const CorrelationTable one[] = {table};
        ps = merged_poles(one, bond_dim);
      }
      emit(io::to_json(ps), out_path, g, s);
      return int{kOk};
    };
  });

  // fit-residues
  std::string poles_path;
  auto* fit_residues = app.add_subcommand("fit-residues", "Residue tensor for a table and pole set");
  fit_residues->add_option("--table", table_path)->required()->check(CLI::ExistingFile);
  fit_residues->add_option("--poles", poles_path)->required()->check(CLI::ExistingFile);
  add_out(fit_residues);
  fit_residues->callback([&] {
    action = [&] {
      const auto table = io::table_from_json(io::read_file(table_path));
      const auto ps = io::pole_set_from_json(io::read_file(poles_path));
      ResidueOptions opts;
      opts.structural_zero = g.tol_zero;
      emit(io::to_json(extract_residues(table, ps, opts)), out_path, g, s);
      return int{kOk};
    };
  });

  // reconstruct
  std::string two_point;
  std::vector<std::string> three_point;
  auto* reconstruct = app.add_subcommand("reconstruct", "Representative from two- and three-point data");
  reconstruct->add_option("--two-point", two_point, "Table or residue tensor for (r, r)")
      ->required()
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--three-point", three_point,
                          "Tables or residue tensors for (r, r, r) and any (r, j, r)")
      ->required()
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--d", bond_dim)->required()->check(CLI::PositiveNumber);
  add_out(reconstruct);
  reconstruct->callback([&] {
    action = [&] {
      std::vector<io::Json> files;
      files.push_back(io::read_file(two_point));
      for (const auto& p : three_point) files.push_back(io::read_file(p));

      std::vector<ResidueTensor> tensors;
      PoleSet ps;
      if (io::file_type(files.front()) == "residue_tensor") {
        for (const auto& f : files) tensors.push_back(io::residue_tensor_from_json(f));
        ps = poles_from_spectrum(tensors.front().kind, tensors.front().spectrum);
      } else {
        std::vector<CorrelationTable> tables;
        for (const auto& f : files) tables.push_back(io::table_from_json(f));
        ps = merged_poles(tables, bond_dim);
        ResidueOptions opts;
        opts.structural_zero = g.tol_zero;
        for (const auto& t : tables) tensors.push_back(extract_residues(t, ps, opts));
      }
      if (ps.size() != static_cast<std::size_t>(bond_dim * bond_dim)) {
        throw Error(ErrorKind::ZeroCoefficient, "only " + std::to_string(ps.size()) + " of " +
                                                    std::to_string(bond_dim * bond_dim) +
                                                    " poles are visible in the two-/three-point data");
      }
      const auto& c2 = tensors.front();
      if (c2.order() != 2 || c2.labels[0] != c2.labels[1]) {
        throw Error(ErrorKind::MalformedInput, "--two-point must carry labels (r, r)");
      }
      const int ref = c2.labels[0];
      std::vector<int> all_labels;
      for (std::size_t i = 1; i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        if (t.order() != 3 || t.labels[0] != ref || t.labels[2] != ref) {
          throw Error(ErrorKind::MalformedInput, "--three-point files must carry labels (r, j, r)");
        }
        all_labels.push_back(t.labels[1]);
      }
      const auto lib = make_library(tensors);
      ReconstructOptions opts{g.tol_zero};
      emit(io::to_json(reconstruct_representative(ps, lib, ref, all_labels, opts)), out_path, g, s);
      return int{kOk};
    };
  });

  // predict
  std::string rep_path;
  std::vector<double> gaps;
  auto* predict = app.add_subcommand("predict", "Correlators predicted by a representative");
  predict->add_option("--rep", rep_path)->required()->check(CLI::ExistingFile);
  predict->add_option("--labels", labels)->required()->delimiter(',');
  auto* gaps_opt = predict->add_option("--gaps", gaps, "Single gap tuple")->delimiter(',');
  predict->add_option("--n-max", n_max, "Discrete table window (default 4 d^2)");
  predict->add_option("--step", step, "Continuous table step")->excludes(gaps_opt);
  predict->add_option("--points", points)->check(CLI::Range(2, 100000));
  add_out(predict);
  predict->callback([&] {
    action = [&] {
      const auto rep = io::representative_from_json(io::read_file(rep_path));
      if (labels.size() < 2) throw Error(ErrorKind::MalformedInput, "need at least two labels");
      if (!gaps.empty()) {
        io::Json j;
        j["schema"] = io::kSchema;
        j["type"] = "prediction";
        j["labels"] = labels;
        j["gaps"] = gaps;
        j["value"] = io::to_json(predict_correlator(rep, labels, gaps));
        emit(j, out_path, g, s);
        return int{kOk};
      }
      CorrelationWindow w;
      if (rep.kind == SystemKind::discrete) {
        w = discrete_window(n_max, rep.bond_dim);
      } else {
        if (step == "auto") throw Error(ErrorKind::MalformedInput, "continuous predictions need --step");
        const TransferSystem sys = rep.system();
        w = CorrelationWindow::continuous(resolve_step(step, sys, labels, rep.bond_dim, g), points);
      }
      emit(io::to_json(predict_table(rep, labels, w)), out_path, g, s);
      return int{kOk};
    };
  });

  // verify
  double tolerance = 1e-7;
  auto* verify_cmd = app.add_subcommand("verify", "Compare a representative with reference tables");
  verify_cmd->add_option("--rep", rep_path)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--tables", table_paths)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--tol", tolerance, "Relative tolerance")->check(CLI::PositiveNumber);
  add_out(verify_cmd);
  verify_cmd->callback([&] {
    action = [&] {
      const auto rep = io::representative_from_json(io::read_file(rep_path));
      const auto report = verify(rep, read_tables(table_paths), tolerance);
      emit(io::to_json(report), out_path, g, s);
      std::ostream& os = report_stream(out_path, s);
      for (const auto& t : report.tables) {
        os << "labels";
        for (int l : t.labels) os << ' ' << l;
        os << "  max_rel " << fmt(t.max_rel) << (t.pass ? "  ok" : "  FAIL") << '\n';
      }
      return report.pass ? int{kOk} : int{kVerifyFailed};
    };
  });

  // channel-check
  std::string spec_path;
  Eigen::Index channel_d = 2;
  auto* channel = app.add_subcommand("channel-check", "Lindblad generator diagnostics");
  channel->add_option("--spec", spec_path, "Lindblad spec (default: random from --seed)")
      ->check(CLI::ExistingFile);
  channel->add_option("--d", channel_d)->check(CLI::PositiveNumber);
  add_out(channel);
  channel->callback([&] {
    action = [&] {
      const LindbladSpec spec = spec_path.empty() ? random_lindblad_spec(g.seed, channel_d)
                                                  : io::lindblad_spec_from_json(io::read_file(spec_path));
      const Matrix L = lindblad_generator(spec);
      const auto ss = stationary_state(L, g.tol_deg);
      const Eigen::SelfAdjointEigenSolver<Matrix> sa(ss.rho, Eigen::EigenvaluesOnly);
      io::Json j;
      j["schema"] = io::kSchema;
      j["type"] = "channel_report";
      j["trace_preservation"] = check_trace_preservation(L);
      j["rho"] = io::to_json(ss.rho);
      j["gap"] = ss.gap;
      j["rho_min_eigenvalue"] = sa.eigenvalues().minCoeff();
      if (spec.jump_ops.size() == 1) {
        j["liouvillian_mismatch"] = (liouvillian(q_from_hamiltonian(spec)) - L).norm();
      }
      emit(j, out_path, g, s);
      return int{kOk};
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    return action ? action() : int{kUsage};
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace wickmps::cli
