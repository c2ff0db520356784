// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lrkv/cli.h"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lrkv/archive.h"
#include "lrkv/attention.h"
#include "lrkv/cost_model.h"
#include "lrkv/csv.h"
#include "lrkv/diversity.h"
#include "lrkv/errors.h"
#include "lrkv/kv_cache.h"
#include "lrkv/presets.h"
#include "lrkv/weights.h"

namespace lrkv {
namespace {

// Raised for bad flag combinations that CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Tolerance exceeded or another check failed; exit code 1.
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

struct ConfigOptions {
  std::string preset;
  std::string config_json;
  std::string mechanism;
  int rank = -1;
  std::string rank_set = "measured";
};

void add_config_options(CLI::App* cmd, ConfigOptions& o, bool with_mechanism,
                        const std::string& json_flag = "--config-json") {
  auto* preset = cmd->add_option("--preset", o.preset,
                                 "Scale preset: 128M, 512M, 1.2B, 2.5B, 6.3B");
  auto* json = cmd->add_option(json_flag, o.config_json,
                               "JSON file or inline object with AttentionConfig fields (overrides the preset)");
  (void)preset;
  (void)json;
  if (with_mechanism)
    cmd->add_option("--mechanism", o.mechanism, "mha, mqa, gqa, mla or lrkv");
  cmd->add_option("--rank", o.rank, "LRKV rank override");
  cmd->add_option("--rank-set", o.rank_set,
                  "Preset LRKV rank: measured (r=64) or table (per-scale)")
      ->check(CLI::IsMember({"measured", "table"}));
}

// Accepts a path or, when it starts with '{', the JSON text itself.
nlohmann::json read_json_file(const std::string& path) {
  if (!path.empty() && path.front() == '{') {
    try {
      return nlohmann::json::parse(path);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("inline config JSON is malformed: ") + e.what());
    }
  }
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config JSON '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config JSON '" + path + "' is malformed: " + e.what());
  }
}

AttentionConfig resolve_config(const ConfigOptions& o, bool need_mechanism) {
  if (o.preset.empty() && o.config_json.empty())
    throw UsageError("one of --preset or a config JSON is required");
  AttentionConfig c;
  if (!o.preset.empty()) {
    c = preset_config(find_preset(o.preset), Mechanism::kMHA,
                      o.rank_set == "table" ? RankSet::kTable : RankSet::kMeasured);
  }
  bool mechanism_given = false;
  if (!o.config_json.empty()) {
    const nlohmann::json j = read_json_file(o.config_json);
    mechanism_given = j.is_object() && j.contains("mechanism");
    c = config_from_json(j, c);
  }
  if (!o.mechanism.empty()) {
    c.mechanism = parse_mechanism(o.mechanism);
    mechanism_given = true;
  }
  if (need_mechanism && !mechanism_given)
    throw UsageError("--mechanism is required (or a 'mechanism' field in the config JSON)");
  if (o.rank >= 0) c.rank = o.rank;
  return c;
}

// --out "-" or empty writes to the command's stdout stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::string mib(std::int64_t bytes) { return format_fixed(bytes / kBytesPerMiB, 1); }

std::vector<int> parse_ranks(const std::string& list) {
  std::vector<int> ranks;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int r = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      ranks.push_back(r);
    } catch (const std::exception&) {
      throw UsageError("--ranks: '" + item + "' is not an integer");
    }
  }
  return ranks;
}

// ---- gen-weights ----------------------------------------------------------

struct GenWeightsOptions {
  ConfigOptions config;
  std::uint64_t seed = 0;
  std::string out;
  std::string dtype = "f64";
};

int cmd_gen_weights(const GenWeightsOptions& o, std::ostream& err) {
  AttentionConfig c = resolve_config(o.config, true);
  c.validate();
  const RngSpec rng{o.seed};
  if (o.dtype == "f32") {
    write_archive(init_weights<float>(c, rng), c, o.out);
  } else {
    write_archive(init_weights<double>(c, rng), c, o.out);
  }
  err << "wrote " << mechanism_name(c.mechanism) << " weights to " << o.out << "\n";
  return kExitOk;
}

// ---- verify ---------------------------------------------------------------

struct VerifyOptions {
  ConfigOptions config;
  int tokens = 256;
  int trials = 5;
  int decode_steps = 16;
  std::string dtype = "f64";
  std::uint64_t seed = 0;
  std::string out;
};

template <typename T>
int run_verify(const AttentionConfig& c, const VerifyOptions& o, std::ostream& os,
               std::ostream& err) {
  const double tol = sizeof(T) == 8 ? 1e-9 : 1e-5;
  const auto rows = equivalence_report<T>(c, RngSpec{o.seed}, o.tokens, o.trials,
                                          o.decode_steps);
  CsvWriter csv(os);
  csv.header({"mechanism", "dtype", "trial", "step", "length", "factored",
              "max_logit_diff", "max_output_diff", "max_diff", "tolerance",
              "explicit_flops", "factored_flops", "explicit_transient_elems",
              "factored_transient_elems", "pass"});
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : rows) {
    std::string logit = "n/a", output = "n/a", both = "n/a", fflops = "n/a",
                felems = "n/a", pass = "n/a";
    if (r.factored_applicable) {
      const double m = std::max(r.max_logit_diff, r.max_output_diff);
      worst = std::max(worst, m);
      const bool good = m <= tol;
      ok = ok && good;
      logit = format_real(r.max_logit_diff);
      output = format_real(r.max_output_diff);
      both = format_real(m);
      fflops = format_int(std::int64_t(r.factored_flops));
      felems = format_int(std::int64_t(r.factored_transient_elements));
      pass = good ? "1" : "0";
    }
    csv.row({std::string(mechanism_name(c.mechanism)), o.dtype,
             format_int(r.trial), format_int(r.step), format_int(std::int64_t(r.length)),
             r.factored_applicable ? "1" : "0", logit, output, both, format_real(tol),
             format_int(std::int64_t(r.explicit_flops)), fflops,
             format_int(std::int64_t(r.explicit_transient_elements)), felems, pass});
  }
  if (!rows.empty() && rows.front().factored_applicable) {
    err << "max factored/explicit discrepancy " << format_real(worst)
        << " (tolerance " << format_real(tol) << ")\n";
  } else {
    err << "factored decode not applicable to " << mechanism_name(c.mechanism)
        << (c.qk_norm ? " with qk_norm" : "") << "; explicit path only\n";
  }
  if (!ok) throw ValidationFailure("equivalence tolerance exceeded");
  return kExitOk;
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  AttentionConfig c = resolve_config(o.config, true);
  c.validate();
  Output sink(o.out, out);
  if (o.dtype == "f32") return run_verify<float>(c, o, sink.stream(), err);
  return run_verify<double>(c, o, sink.stream(), err);
}

// ---- memory ---------------------------------------------------------------

struct MemoryOptions {
  ConfigOptions config;
  std::int64_t tokens = 2048;
  std::int64_t batch = 1;
  int bytes = 2;
  int mla_streams = 2;
  std::string out;
};

int cmd_memory(const MemoryOptions& o, std::ostream& out) {
  const AttentionConfig base = resolve_config(o.config, false);
  Output sink(o.out, out);
  CsvWriter csv(sink.stream());
  csv.header({"mechanism", "cache_bytes", "ratio_vs_mha", "cache_mib", "kv_params",
              "tokens", "batch", "bytes_per_element", "n_layers", "mla_latent_streams",
              "H", "d_h", "G", "d_c", "r"});
  CostQuery mha{base, o.tokens, o.batch, o.bytes, o.mla_streams};
  mha.config.mechanism = Mechanism::kMHA;
  const std::int64_t mha_bytes = cache_bytes(mha);
  for (Mechanism m : kAllMechanisms) {
    CostQuery q = mha;
    q.config.mechanism = m;
    const std::int64_t bytes = cache_bytes(q);
    const double ratio = mha_bytes > 0 ? double(bytes) / mha_bytes : cache_ratio(q.config, o.mla_streams);
    csv.row({std::string(mechanism_name(m)), format_int(bytes), format_fixed(ratio, 3),
             mib(bytes), format_int(kv_param_count(q.config)), format_int(o.tokens),
             format_int(o.batch), format_int(o.bytes), format_int(base.n_layers),
             format_int(o.mla_streams), format_int(base.n_heads),
             format_int(base.head_dim),
             m == Mechanism::kGQA ? format_int(base.kv_groups) : "",
             m == Mechanism::kMLA ? format_int(base.latent_dim) : "",
             m == Mechanism::kLRKV ? format_int(base.rank) : ""});
  }
  return kExitOk;
}

// ---- flops ----------------------------------------------------------------

struct FlopsOptions {
  ConfigOptions config;
  std::int64_t tokens = 2048;
  std::int64_t batch = 1;
  std::string out;
};

int cmd_flops(const FlopsOptions& o, std::ostream& out) {
  const AttentionConfig base = resolve_config(o.config, false);
  Output sink(o.out, out);
  CsvWriter csv(sink.stream());
  csv.header({"mechanism", "path", "tokens", "batch", "projections", "scan",
              "reconstruction", "softmax", "total", "attention_only",
              "overhead_vs_mha", "attention_overhead_vs_mha",
              "reconstruction_t_dependence", "flop_convention"});
  auto emit = [&](Mechanism m, DecodePath path, const char* path_name) {
    CostQuery q{base, o.tokens, o.batch, 2};
    q.config.mechanism = m;
    const DecodeFlops f = decode_flops(q, path);
    csv.row({std::string(mechanism_name(m)), path_name, format_int(o.tokens),
             format_int(o.batch), format_int(f.projections), format_int(f.scan),
             format_int(f.reconstruction), format_int(f.softmax), format_int(f.total),
             format_int(f.attention_only()), format_fixed(f.overhead_vs_mha, 6),
             format_fixed(f.attention_overhead_vs_mha, 6),
             std::string(reconstruction_t_dependence(q.config, path)),
             "madd=2;softmax=5/position;per layer per step"});
  };
  emit(Mechanism::kMHA, DecodePath::kExplicit, "explicit");
  emit(Mechanism::kMQA, DecodePath::kExplicit, "explicit");
  emit(Mechanism::kGQA, DecodePath::kExplicit, "explicit");
  emit(Mechanism::kMLA, DecodePath::kExplicit, "explicit");
  emit(Mechanism::kMLA, DecodePath::kFactored, "factored");
  emit(Mechanism::kLRKV, DecodePath::kExplicit, "explicit");
  emit(Mechanism::kLRKV, DecodePath::kFactored, "factored");
  return kExitOk;
}

// ---- ablate ---------------------------------------------------------------

struct AblateOptions {
  ConfigOptions config;
  std::string ranks = "8,16,32,64,128";
  std::int64_t tokens = 2048;
  std::string out;
};

int cmd_ablate(const AblateOptions& o, std::ostream& out) {
  AttentionConfig base = resolve_config(o.config, false);
  base.mechanism = Mechanism::kLRKV;
  const auto rows = ablation_table(base, parse_ranks(o.ranks), o.tokens);
  Output sink(o.out, out);
  CsvWriter csv(sink.stream());
  csv.header({"rank", "cache_ratio", "cache_pct", "cache_bytes", "cache_mib",
              "kv_params", "decode_overhead", "attention_overhead"});
  for (const auto& r : rows) {
    csv.row({format_int(r.rank), format_fixed(r.cache_ratio, 3),
             format_fixed(100.0 * r.cache_ratio, 1), format_int(r.cache_bytes),
             mib(r.cache_bytes), format_int(r.kv_params),
             format_fixed(r.decode_overhead, 6), format_fixed(r.attention_overhead, 6)});
  }
  return kExitOk;
}

// ---- diversity ------------------------------------------------------------

struct DiversityOptions {
  std::string weights;
  std::string out_prefix;
};

LoadedWeights<double> load_as_double(const std::string& path) {
  if (archive_dtype(path) == "f32") {
    const auto f = read_archive<float>(path);
    return {f.config, f.weights.cast<double>()};
  }
  return read_archive<double>(path);
}

void write_square(const std::string& path, const Matrix<double>& m) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  CsvWriter csv(os);
  std::vector<std::string> header = {"head"};
  for (std::size_t j = 0; j < m.cols(); ++j) header.push_back("h" + std::to_string(j));
  csv.header(header);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row = {format_int(std::int64_t(i))};
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(format_real(m(i, j)));
    csv.row(row);
  }
}

int cmd_diversity(const DiversityOptions& o, std::ostream& err) {
  const LoadedWeights<double> loaded = load_as_double(o.weights);
  const DiversityReport report = diversity_report(loaded.weights, loaded.config);
  const std::string& p = o.out_prefix;

  write_square(p + "_similarity.csv", report.similarity.values);
  write_square(p + "_centered.csv", report.centered.values);

  const std::pair<const char*, const SpectrumReport*> kinds[] = {
      {"uncentered", &report.uncentered_spectrum},
      {"centered", &report.centered_spectrum}};
  {
    std::ofstream os(p + "_spectra.csv");
    CsvWriter csv(os);
    csv.header({"kind", "index", "eigenvalue", "variance_fraction"});
    for (const auto& [kind, s] : kinds)
      for (std::size_t i = 0; i < s->eigenvalues.size(); ++i)
        csv.row({kind, format_int(std::int64_t(i)), format_real(s->eigenvalues[i]),
                 format_real(s->variance_fractions[i])});
  }
  {
    std::ofstream os(p + "_cumulative.csv");
    CsvWriter csv(os);
    csv.header({"kind", "components", "cumulative_variance"});
    for (const auto& [kind, s] : kinds)
      for (std::size_t i = 0; i < s->cumulative_variance.size(); ++i)
        csv.row({kind, format_int(std::int64_t(i + 1)),
                 format_real(s->cumulative_variance[i])});
  }
  {
    std::ofstream os(p + "_effective_rank.csv");
    CsvWriter csv(os);
    csv.header({"kind", "mechanism", "heads", "effective_rank", "effective_rank_pct",
                "components_for_90pct", "degenerate", "degenerate_heads"});
    std::string degenerate_heads;
    for (int h : report.degenerate_heads) {
      if (!degenerate_heads.empty()) degenerate_heads += ';';
      degenerate_heads += std::to_string(h);
    }
    for (const auto& [kind, s] : kinds)
      csv.row({kind, std::string(mechanism_name(loaded.config.mechanism)),
               format_int(loaded.config.n_heads), format_real(s->effective_rank_abs),
               format_fixed(100.0 * s->effective_rank_pct, 2),
               format_int(s->n_components_for_90pct), s->degenerate ? "1" : "0",
               degenerate_heads});
  }
  if (loaded.config.mechanism == Mechanism::kLRKV) {
    std::ofstream os(p + "_magnitude.csv");
    CsvWriter csv(os);
    csv.header({"head", "path", "shared_norm", "residual_norm", "total_norm", "cosine"});
    for (const auto& r : magnitude_report(loaded.weights, loaded.config))
      csv.row({format_int(r.head), std::string(1, r.path), format_real(r.shared_norm),
               format_real(r.residual_norm), format_real(r.total_norm),
               format_real(r.cosine)});
  }
  err << "uncentered effective rank "
      << format_fixed(report.uncentered_spectrum.effective_rank_abs, 4)
      << ", centered " << format_fixed(report.centered_spectrum.effective_rank_abs, 4)
      << " of H=" << loaded.config.n_heads << "\n";
  return kExitOk;
}

// ---- svd-compare ----------------------------------------------------------

struct SvdCompareOptions {
  std::string weights;
  std::string reference;
  int rank = -1;
  std::string out;
};

int cmd_svd_compare(const SvdCompareOptions& o, std::ostream& out) {
  const auto w = load_as_double(o.weights);
  const auto ref = load_as_double(o.reference);
  const auto rows = factorization_gap(w.weights, w.config, ref.weights, ref.config, o.rank);
  Output sink(o.out, out);
  CsvWriter csv(sink.stream());
  csv.header({"head", "path", "rank", "learned_error", "optimal_error", "ratio"});
  for (const auto& r : rows)
    csv.row({format_int(r.head), std::string(1, r.path), format_int(r.rank),
             format_real(r.learned_error), format_real(r.optimal_error),
             format_real(r.ratio)});
  return kExitOk;
}

// ---- gradcheck ------------------------------------------------------------

struct GradcheckOptions {
  std::string config_json;
  std::uint64_t seed = 0;
  int tokens = 3;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::string out;
};

// ½‖X (W_shared + U Bᵀ)‖² for one head and path.
double half_sq_loss(const Matrix<double>& x, const Matrix<double>& shared,
                    const Matrix<double>& u, const Matrix<double>& b) {
  const Matrix<double> k =
      matmul(x, shared + low_rank_product(u, b, shared.rows(), shared.cols()));
  return 0.5 * frobenius_inner(k, k);
}

Matrix<double> central_difference(Matrix<double> param, double step,
                                  const std::function<double(const Matrix<double>&)>& f) {
  Matrix<double> grad(param.rows(), param.cols());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double keep = param.data()[i];
    param.data()[i] = keep + step;
    const double up = f(param);
    param.data()[i] = keep - step;
    const double down = f(param);
    param.data()[i] = keep;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  AttentionConfig c;
  c.mechanism = Mechanism::kLRKV;
  c.d_model = 8;
  c.n_heads = 2;
  c.head_dim = 4;
  c.rank = 2;
  if (!o.config_json.empty()) c = config_from_json(read_json_file(o.config_json), c);
  if (c.mechanism != Mechanism::kLRKV)
    throw UsageError("gradcheck requires an LRKV config");
  c.validate();
  const WeightSet<double> w = init_weights<double>(c, RngSpec{o.seed});
  NormalSampler rng(derive_seed(o.seed, 1));
  Matrix<double> x(o.tokens, c.d_model);
  for (double& v : x.values()) v = rng.next();

  Output sink(o.out, out);
  CsvWriter csv(sink.stream());
  csv.header({"head", "path", "param", "max_abs_error", "rel_error", "tolerance", "pass"});
  bool ok = true;
  for (int h = 0; h < c.n_heads; ++h) {
    for (KvPath path : {KvPath::kKey, KvPath::kValue}) {
      const bool key = path == KvPath::kKey;
      const Matrix<double>& shared = key ? w.shared_k() : w.shared_v();
      const Matrix<double>& u = key ? w.u_k[h] : w.u_v[h];
      const Matrix<double>& b = key ? w.b_k[h] : w.b_v[h];
      const Matrix<double> k =
          matmul(x, shared + low_rank_product(u, b, shared.rows(), shared.cols()));
      const ProjectionGrad<double> g = projection_backward(w, c, x, k, h, path);
      const std::pair<const char*, std::pair<Matrix<double>, Matrix<double>>> checks[] = {
          {"shared", {g.shared, central_difference(shared, o.step, [&](const Matrix<double>& p) {
                        return half_sq_loss(x, p, u, b);
                      })}},
          {"U", {g.u, central_difference(u, o.step, [&](const Matrix<double>& p) {
                   return half_sq_loss(x, shared, p, b);
                 })}},
          {"B", {g.b, central_difference(b, o.step, [&](const Matrix<double>& p) {
                   return half_sq_loss(x, shared, u, p);
                 })}},
      };
      for (const auto& [name, pair] : checks) {
        const auto& [analytic, numeric] = pair;
        const double abs_err = analytic.empty() ? 0.0 : max_abs_diff(analytic, numeric);
        const double denom = std::max(frobenius_norm(numeric), 1e-12);
        const double rel = analytic.empty() ? 0.0 : frobenius_norm(analytic - numeric) / denom;
        const bool good = rel <= o.tolerance;
        ok = ok && good;
        csv.row({format_int(h), key ? "K" : "V", name, format_real(abs_err),
                 format_real(rel), format_real(o.tolerance), good ? "1" : "0"});
      }
    }
  }
  if (!ok) throw ValidationFailure("gradient check exceeded tolerance");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LRKV attention laboratory: decode equivalence, cost models, head diversity",
               "lrkv_lab"};
  app.require_subcommand(1);

  GenWeightsOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-weights", "Initialize a weight set and write an archive");
  add_config_options(gen_cmd, gen.config, true);
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Archive path")->required();
  gen_cmd->add_option("--dtype", gen.dtype)->check(CLI::IsMember({"f32", "f64"}));

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand(
      "verify", "Compare factored and explicit decode on random instances");
  add_config_options(verify_cmd, verify.config, true);
  verify_cmd->add_option("--tokens", verify.tokens, "Sequence length T")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--trials", verify.trials)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--decode-steps", verify.decode_steps,
                         "Tokens decoded after prefill (0 = all)")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--dtype", verify.dtype)->check(CLI::IsMember({"f32", "f64"}));
  verify_cmd->add_option("--seed", verify.seed);
  verify_cmd->add_option("--out", verify.out, "CSV path (default stdout)");

  MemoryOptions memory;
  auto* memory_cmd = app.add_subcommand("memory", "KV-cache bytes for every mechanism");
  add_config_options(memory_cmd, memory.config, false, "--custom");
  memory_cmd->add_option("--tokens", memory.tokens)->check(CLI::NonNegativeNumber);
  memory_cmd->add_option("--batch", memory.batch)->check(CLI::PositiveNumber);
  memory_cmd->add_option("--bytes", memory.bytes)->check(CLI::IsMember({1, 2, 4, 8}));
  memory_cmd->add_option("--mla-streams", memory.mla_streams)->check(CLI::IsMember({1, 2}));
  memory_cmd->add_option("--out", memory.out);

  FlopsOptions flops;
  auto* flops_cmd = app.add_subcommand("flops", "Decode-step FLOPs for every mechanism");
  add_config_options(flops_cmd, flops.config, false);
  flops_cmd->add_option("--tokens", flops.tokens)->check(CLI::NonNegativeNumber);
  flops_cmd->add_option("--batch", flops.batch)->check(CLI::PositiveNumber);
  flops_cmd->add_option("--out", flops.out);

  AblateOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "LRKV rank ablation table");
  add_config_options(ablate_cmd, ablate.config, false);
  ablate_cmd->add_option("--ranks", ablate.ranks, "Comma-separated ranks");
  ablate_cmd->add_option("--tokens", ablate.tokens)->check(CLI::NonNegativeNumber);
  ablate_cmd->add_option("--out", ablate.out);

  DiversityOptions diversity;
  auto* diversity_cmd = app.add_subcommand("diversity", "Head-diversity analysis of an archive");
  diversity_cmd->add_option("--weights", diversity.weights)->required();
  diversity_cmd->add_option("--out-prefix", diversity.out_prefix)->required();

  SvdCompareOptions svd;
  auto* svd_cmd = app.add_subcommand(
      "svd-compare", "LRKV residual error against the optimal truncated SVD");
  svd_cmd->add_option("--weights", svd.weights, "LRKV archive")->required();
  svd_cmd->add_option("--reference", svd.reference, "Reference (MHA) archive")->required();
  svd_cmd->add_option("--rank", svd.rank, "Rank for the optimum (default: LRKV r)");
  svd_cmd->add_option("--out", svd.out);

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "Analytic LRKV projection gradients against finite differences");
  grad_cmd->add_option("--config-json", grad.config_json);
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--tokens", grad.tokens)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--out", grad.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_weights(gen, err);
    if (*verify_cmd) return cmd_verify(verify, out, err);
    if (*memory_cmd) return cmd_memory(memory, out);
    if (*flops_cmd) return cmd_flops(flops, out);
    if (*ablate_cmd) return cmd_ablate(ablate, out);
    if (*diversity_cmd) return cmd_diversity(diversity, err);
    if (*svd_cmd) return cmd_svd_compare(svd, out);
    if (*grad_cmd) return cmd_gradcheck(grad, out);
  } catch (const ValidationFailure& e) {
    err << "validation failed: " << e.what() << "\n";
    return kExitValidationFailure;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  }
  return kExitUsage;
}

}  // namespace lrkv
