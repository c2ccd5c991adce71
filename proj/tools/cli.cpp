#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "rigidity/decomp.hpp"
#include "rigidity/hadamard.hpp"
#include "rigidity/io.hpp"
#include "rigidity/oracle.hpp"
#include "rigidity/random.hpp"

namespace rigidity::cli {
namespace {

/// Input problem the user can fix; reported with exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct FactorSource {
  enum class Kind { file, walsh, paley1, paley2, random };
  Kind kind;
  std::string path;
  std::size_t param = 0;

  std::string describe() const {
    switch (kind) {
      case Kind::file: return "'" + path + "'";
      case Kind::walsh: return "walsh(" + std::to_string(param) + ")";
      case Kind::paley1: return "paley1(" + std::to_string(param) + ")";
      case Kind::paley2: return "paley2(" + std::to_string(param) + ")";
      case Kind::random: return "random(" + std::to_string(param) + ")";
    }
    return "";
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Factor flags shared by decompose, verify and generate.  Factors are
/// taken in command-line order across all flags.
struct TargetArgs {
  std::vector<std::string> factor_lists;
  std::vector<std::size_t> walsh, paley1, paley2, random;
  std::string field;
  std::uint64_t seed = 1;
  std::size_t max_n = 65536;

  CLI::Option* o_factors = nullptr;
  CLI::Option* o_walsh = nullptr;
  CLI::Option* o_paley1 = nullptr;
  CLI::Option* o_paley2 = nullptr;
  CLI::Option* o_random = nullptr;

  void add_to(CLI::App& app) {
    auto repeat = [&](auto* opt) { return opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll); };
    o_factors = repeat(app.add_option("--factors", factor_lists, "Comma-separated matrix files (square factors)"));
    o_walsh = repeat(app.add_option("--walsh", walsh, "Walsh-Hadamard factor of order 2^k"));
    o_paley1 = repeat(app.add_option("--paley1", paley1, "Paley I Hadamard factor, q prime = 3 mod 4"));
    o_paley2 = repeat(app.add_option("--paley2", paley2, "Paley II Hadamard factor, q prime = 1 mod 4"));
    o_random = repeat(app.add_option("--random", random, "Random d x d factor drawn with --seed"));
    app.add_option("--field", field, "'Fp <p>' or 'Q' (default: first factor file's field, else Q)");
    app.add_option("--seed", seed, "Seed for random factors")->capture_default_str();
    app.add_option("--max-n", max_n, "Largest order of any product or materialization")->capture_default_str();
  }

  bool empty() const {
    return factor_lists.empty() && walsh.empty() && paley1.empty() && paley2.empty() && random.empty();
  }

  std::vector<FactorSource> sources(const CLI::App& app) const {
    std::vector<FactorSource> out;
    std::map<const CLI::Option*, std::size_t> seen;
    for (const CLI::Option* op : app.parse_order()) {
      const std::size_t k = seen[op]++;
      using K = FactorSource::Kind;
      if (op == o_factors) {
        for (const auto& p : split_list(factor_lists.at(k))) out.push_back({K::file, p, 0});
      } else if (op == o_walsh) {
        out.push_back({K::walsh, "", walsh.at(k)});
      } else if (op == o_paley1) {
        out.push_back({K::paley1, "", paley1.at(k)});
      } else if (op == o_paley2) {
        out.push_back({K::paley2, "", paley2.at(k)});
      } else if (op == o_random) {
        out.push_back({K::random, "", random.at(k)});
      }
    }
    return out;
  }

  FieldSpec field_spec(const std::vector<FactorSource>& src) const {
    if (!field.empty()) return FieldSpec::parse(field);
    if (!src.empty() && src.front().kind == FactorSource::Kind::file)
      return read_matrix_header(read_file(src.front().path)).field;
    return FieldSpec::rationals();
  }

  Limits limits() const {
    Limits l;
    l.max_order = max_n;
    return l;
  }
};

/// Builds the factors; order-1 Walsh factors are dropped.
template <ExactField F>
std::vector<DenseMatrix<F>> build_factors(const F& f, const std::vector<FactorSource>& src, const TargetArgs& args) {
  Rng rng(args.seed);
  std::vector<DenseMatrix<F>> out;
  std::size_t n = 1;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& s = src[i];
    try {
      std::optional<DenseMatrix<F>> m;
      switch (s.kind) {
        case FactorSource::Kind::file: {
          auto sm = parse_matrix(read_file(s.path), f);
          if (sm.rows() != sm.cols()) throw InvalidArgument("factor is not square");
          m = sm.to_dense(args.limits());
          break;
        }
        case FactorSource::Kind::walsh:
          if (s.param == 0) continue;
          m = walsh(s.param, args.limits()).to_field(f);
          break;
        case FactorSource::Kind::paley1: m = paley1(s.param).to_field(f); break;
        case FactorSource::Kind::paley2: m = paley2(s.param).to_field(f); break;
        case FactorSource::Kind::random:
          if (s.param < 2) throw InvalidArgument("random factors need d >= 2");
          m = rng.matrix(f, s.param, s.param);
          break;
      }
      if (m->rows() < 2) throw InvalidArgument("factor has dimension < 2");
      if (n > args.max_n / m->rows())
        throw SizeCapExceeded("product order exceeds --max-n " + std::to_string(args.max_n));
      n *= m->rows();
      out.push_back(std::move(*m));
    } catch (const Error& e) {
      throw UsageError("factor " + std::to_string(i + 1) + " " + s.describe() + ": " + e.what());
    }
  }
  if (out.empty()) throw UsageError("no factors given (use --factors, --walsh, --paley1, --paley2 or --random)");
  return out;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") out << text;
  else write_file(path, text);
}

nlohmann::ordered_json report_json(const PipelineReport& rep, const VerificationReport& ver) {
  nlohmann::ordered_json j;
  j["mode"] = rep.mode;
  j["field"] = rep.field;
  j["dims"] = rep.dims;
  j["order"] = rep.order;
  j["epsilon"] = rep.epsilon;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.params) params[k] = v;
  j["params"] = params;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : rep.layers)
    layers.push_back({{"label", l.label}, {"kind", l.kind}, {"rank", l.rank}, {"sparsity", l.sparsity}});
  j["layers"] = layers;
  j["flags"] = rep.flags;
  j["rank"] = rep.final_rank;
  j["sparsity"] = rep.final_sparsity;
  j["rank_exponent"] = rep.rank_exponent();
  j["sparsity_exponent"] = rep.sparsity_exponent();
  j["verification"] = {{"ok", ver.ok()},
                       {"reconstruction", ver.reconstruction_ok},
                       {"first_mismatch", ver.first_mismatch},
                       {"structural_rank", ver.structural_rank},
                       {"exact_rank", ver.exact_rank_computed ? nlohmann::ordered_json(ver.exact_rank) : nullptr},
                       {"z_row_nnz", ver.z_nnz.max_row},
                       {"z_col_nnz", ver.z_nnz.max_col},
                       {"claimed_rank", ver.claimed_rank},
                       {"claimed_sparsity", ver.claimed_sparsity}};
  return j;
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeArgs {
  TargetArgs target;
  double epsilon = 0;
  std::string mode = "direct";
  std::string delta = "auto";
  std::string weights = "uniform";
  double bound = 2;
  std::size_t bin_cap = 0;
  double c0 = 0.5;
  bool gate = false;
  std::size_t subset_cap = 16;
  std::string out_path, report_path, json_path;
};

DecomposeOptions make_options(const DecomposeArgs& a) {
  DecomposeOptions opt;
  opt.epsilon = a.epsilon;
  opt.limits = a.target.limits();
  opt.bound = a.bound;
  opt.bin_cap = a.bin_cap;
  opt.c0 = a.c0;
  opt.gate_asymptotic_cases = a.gate;
  opt.subset_cap = a.subset_cap;
  if (a.delta != "auto") {
    try {
      std::size_t used = 0;
      opt.delta = std::stod(a.delta, &used);
      if (used != a.delta.size()) throw std::invalid_argument(a.delta);
    } catch (const std::exception&) {
      throw UsageError("--delta must be 'auto' or a real number, got '" + a.delta + "'");
    }
  }
  if (a.weights != "uniform") opt.weights = WeightFunction::parse(read_file(a.weights));
  return opt;
}

template <ExactField F>
int run_decompose(const F& f, const DecomposeArgs& a, const std::vector<FactorSource>& src, std::ostream& out) {
  const auto factors = build_factors(f, src, a.target);
  const auto opt = make_options(a);
  PipelineReport rep;
  Cert<F> cert = [&] {
    if (a.mode == "equal") {
      for (const auto& m : factors)
        if (m.rows() != factors.front().rows())
          throw UsageError("mode 'equal' needs factors of one size; use --mode direct or binpack");
      return decompose_kron_product(KroneckerSpec<F>(f, factors, opt.limits), opt, &rep);
    }
    if (a.mode == "direct") return decompose_unequal(factors, opt, UnequalMode::direct, &rep);
    if (a.mode == "binpack") return decompose_unequal(factors, opt, UnequalMode::binpack, &rep);
    return hadamard_family_pipeline(factors, opt, &rep);
  }();
  const auto ver = verify_cert(cert);

  if (!a.out_path.empty()) emit(a.out_path, render_cert(cert), out);
  std::string text = rep.to_text() + "\n[verification]\n" + ver.to_text();
  if (!a.report_path.empty()) {
    emit(a.report_path, text, out);
    out << "verification: " << (ver.ok() ? "ok" : "FAILED") << " rank=" << cert.claimed_rank
        << " sparsity=" << cert.claimed_sparsity << "\n";
  } else {
    out << text;
  }
  if (!a.json_path.empty()) emit(a.json_path, report_json(rep, ver).dump(2) + "\n", out);
  return ver.ok() ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  TargetArgs target;
  std::string cert_path;
  std::string target_path;
};

template <ExactField F>
int run_verify(const F& f, const VerifyArgs& a, const std::vector<FactorSource>& src, std::ostream& out) {
  Cert<F> cert = parse_cert(read_file(a.cert_path), f);
  std::optional<Target<F>> target;
  if (!a.target_path.empty()) {
    if (!src.empty()) throw UsageError("give either --target or factor flags, not both");
    target.emplace(parse_matrix(read_file(a.target_path), f));
  } else {
    target.emplace(KroneckerSpec<F>(f, build_factors(f, src, a.target), a.target.limits()));
  }
  if (target->rows() != cert.rows || target->cols() != cert.cols)
    throw UsageError("certificate is " + std::to_string(cert.rows) + "x" + std::to_string(cert.cols) +
                     " but the target is " + std::to_string(target->rows()) + "x" + std::to_string(target->cols()));
  const auto ver = verify_cert(cert, *target);
  out << "certificate: " << a.cert_path << "\nkind: " << cert.kind() << "\n" << ver.to_text();
  return ver.ok() ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// predict

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  for (const auto& item : split_list(text)) {
    const auto caret = item.find('^');
    try {
      std::size_t used = 0;
      const std::string base = item.substr(0, caret);
      const auto d = std::stoull(base, &used);
      if (used != base.size()) throw std::invalid_argument(item);
      std::size_t reps = 1;
      if (caret != std::string::npos) {
        const std::string e = item.substr(caret + 1);
        reps = std::stoull(e, &used);
        if (used != e.size()) throw std::invalid_argument(item);
      }
      if (d < 2 || reps == 0 || reps > 4096) throw std::invalid_argument(item);
      dims.insert(dims.end(), reps, d);
    } catch (const std::exception&) {
      throw UsageError("bad --dims item '" + item + "' (expected d or d^k with d >= 2)");
    }
  }
  if (dims.empty()) throw UsageError("--dims is empty");
  std::sort(dims.begin(), dims.end());
  return dims;
}

// ---------------------------------------------------------------------------
// oracle

template <ExactField F>
int run_oracle(const F& f, const std::string& path, std::size_t rank, bool rc, std::ostream& out) {
  const auto a = parse_matrix(read_file(path), f).to_dense();
  const auto res = rc ? brute_rc_rigidity(a, rank) : brute_rigidity(a, rank);
  out << "measure: " << (rc ? "R^rc" : "R") << "\n";
  out << "field: " << f.name() << "\n";
  out << "target_rank: " << res.target_rank << "\n";
  out << "value: " << res.value << "\n";
  out << "# witness change matrix Z with rank(A - Z) <= target_rank\n";
  out << render_matrix(res.witness, MatrixFormat::dense);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

template <ExactField F>
int run_generate(const F& f, const TargetArgs& t, const std::vector<FactorSource>& src, MatrixFormat format,
                 const std::string& out_path, std::ostream& out) {
  const auto factors = build_factors(f, src, t);
  const KroneckerSpec<F> spec(f, factors, t.limits());
  emit(out_path, render_matrix(spec.materialize(), format), out);
  return kExitOk;
}

const CLI::App* active_subcommand(const CLI::App& app) {
  for (const auto* sub : app.get_subcommands()) return sub;
  return &app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact low-rank plus sparse certificates for Kronecker products", "rigidity"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // decompose
  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Build and verify a certificate for a Kronecker product");
  dec.target.add_to(*c_dec);
  c_dec->add_option("--epsilon,--eps", dec.epsilon, "Sparsity exponent eps")->required();
  c_dec->add_option("--mode", dec.mode, "equal | direct | binpack | hadamard")
      ->check(CLI::IsMember({"equal", "direct", "binpack", "hadamard"}))
      ->capture_default_str();
  c_dec->add_option("--delta", dec.delta, "Relative threshold delta, or 'auto'")->capture_default_str();
  c_dec->add_option("--weights", dec.weights, "'uniform' or a file of 'd w' lines")->capture_default_str();
  c_dec->add_option("--bound", dec.bound, "Size bound b (hadamard mode)")->capture_default_str();
  c_dec->add_option("--bin-cap", dec.bin_cap, "Bin capacity (binpack; 0 = largest dimension)")->capture_default_str();
  c_dec->add_option("--c0", dec.c0, "Constant in gamma_b (hadamard mode)")->capture_default_str();
  c_dec->add_flag("--gate-asymptotic", dec.gate, "Return the trivial certificate in the bounded-n case");
  c_dec->add_option("--subset-cap", dec.subset_cap, "Largest k for subset expansion")->capture_default_str();
  c_dec->add_option("--out", dec.out_path, "Certificate output file");
  c_dec->add_option("--report", dec.report_path, "Report output file (default: stdout)");
  c_dec->add_option("--json", dec.json_path, "Machine-readable report file");

  // verify
  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Check a certificate against its target");
  ver.target.add_to(*c_ver);
  c_ver->add_option("--cert", ver.cert_path, "Certificate file")->required();
  c_ver->add_option("--target", ver.target_path, "Target matrix file (instead of factor flags)");

  // predict
  std::string dims_text, pred_weights = "uniform";
  double pred_eps = 0, pred_c = 1.0;
  auto* c_pred = app.add_subcommand("predict", "Parameters K, L, delta and predicted (r, t) for given sizes");
  c_pred->add_option("--dims", dims_text, "Comma-separated dimensions, 'd^k' repeats d k times")->required();
  c_pred->add_option("--epsilon,--eps", pred_eps, "Sparsity exponent eps")->required();
  c_pred->add_option("--weights", pred_weights, "'uniform' or a file of 'd w' lines")->capture_default_str();
  c_pred->add_option("--c", pred_c, "Constant c in gamma")->capture_default_str();

  // oracle
  std::string oracle_path;
  std::size_t oracle_rank = 0;
  bool oracle_rc = false;
  auto* c_orc = app.add_subcommand("oracle", "Exhaustive rigidity of a tiny matrix");
  c_orc->add_option("--file", oracle_path, "Matrix file")->required();
  c_orc->add_option("--rank,--target-rank", oracle_rank, "Target rank r")->required();
  c_orc->add_flag("--rc", oracle_rc, "Row/column rigidity instead of total changes");

  // generate
  TargetArgs gen;
  std::string gen_format = "dense", gen_out;
  auto* c_gen = app.add_subcommand("generate", "Write a Kronecker product of generated or given factors");
  gen.add_to(*c_gen);
  c_gen->add_option("--format", gen_format, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}))
      ->capture_default_str();
  c_gen->add_option("--out", gen_out, "Output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << active_subcommand(app)->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << active_subcommand(app)->help();
    return kExitUsage;
  }

  try {
    if (c_dec->parsed()) {
      if (!(dec.epsilon > 0)) throw UsageError("--epsilon must be positive");
      const auto src = dec.target.sources(*c_dec);
      return with_field(dec.target.field_spec(src), [&](const auto& f) { return run_decompose(f, dec, src, out); });
    }
    if (c_ver->parsed()) {
      const auto spec = read_cert_field(read_file(ver.cert_path));
      if (!ver.target.field.empty() && !(FieldSpec::parse(ver.target.field) == spec))
        throw UsageError("--field " + ver.target.field + " does not match the certificate's " + spec.to_string());
      const auto src = ver.target.sources(*c_ver);
      if (src.empty() && ver.target_path.empty()) throw UsageError("verify needs --target or factor flags");
      return with_field(spec, [&](const auto& f) { return run_verify(f, ver, src, out); });
    }
    if (c_pred->parsed()) {
      const auto dims = parse_dims(dims_text);
      WeightFunction w;
      if (pred_weights != "uniform") w = WeightFunction::parse(read_file(pred_weights));
      const ScoreProfile profile(dims, w);
      out << predict_parameters(profile, pred_eps, pred_c).to_text();
      return kExitOk;
    }
    if (c_orc->parsed()) {
      const auto spec = read_matrix_header(read_file(oracle_path)).field;
      return with_field(spec, [&](const auto& f) { return run_oracle(f, oracle_path, oracle_rank, oracle_rc, out); });
    }
    if (c_gen->parsed()) {
      const auto src = gen.sources(*c_gen);
      const auto format = gen_format == "sparse" ? MatrixFormat::sparse : MatrixFormat::dense;
      return with_field(gen.field_spec(src), [&](const auto& f) { return run_generate(f, gen, src, format, gen_out, out); });
    }
  } catch (const SizeCapExceeded& e) {
    err << "refused: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace rigidity::cli
