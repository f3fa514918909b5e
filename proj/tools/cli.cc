#include "cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "fslab/diagnostics.h"
#include "fslab/errors.h"
#include "fslab/serialize.h"
#include "fslab/training.h"

namespace fs = std::filesystem;

namespace fslab::cli {

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::kExp1: return "exp1";
    case Verb::kExp2: return "exp2";
    case Verb::kConstructStable: return "construct-stable";
    case Verb::kVerify: return "verify-false-structure";
    case Verb::kProbe: return "probe";
  }
  return "?";
}

Verb parse_verb(std::string_view name) {
  for (Verb v : {Verb::kExp1, Verb::kExp2, Verb::kConstructStable, Verb::kVerify,
                 Verb::kProbe}) {
    if (name == to_string(v)) return v;
  }
  throw ParameterError("unknown command '" + std::string(name) + "'");
}

// ------------------------------------------------------------ defaults

Values defaults(Verb verb) {
  Values v{{"out", std::string(to_string(verb)) + "-out"}};
  const Values problem{{"a", "20"}, {"K", "26"}, {"epsilon", "0.01"}, {"delta", "0.0001"}};
  const Values rows{{"b", "0.009"}, {"c", "0.01"}, {"n_test", "1000"}};
  switch (verb) {
    case Verb::kExp1:
      v.insert(problem.begin(), problem.end());
      v.insert({{"seed", "1"}, {"epochs", "30000"}, {"grid_n", "2000"}, {"threshold", "0.9"},
                {"psi4_lift", "zero"}});
      break;
    case Verb::kExp2:
      v.insert({{"seeds", "1,2,3,4,5"},
                {"rows", "0.009:0.01,0.008:0.009,0.007:0.008,0.006:0.007"},
                {"n_test", "1000"},
                {"test_seed", "2019"},
                {"epochs", "10"},
                {"batch", "60"},
                {"train_a", "0.01"},
                {"relu_between_dense", "false"},
                {"pgm_dump", "4"}});
      break;
    case Verb::kConstructStable:
      v.insert(problem.begin(), problem.end());
      v.insert({{"seed", "1"}, {"eta", "0.001"}, {"r", "7"}, {"samples", "100000"},
                {"subsets", "100"}, {"grid_n", "2000"}});
      break;
    case Verb::kVerify:
      v.insert(problem.begin(), problem.end());
      v.insert(rows.begin(), rows.end());
      v.insert({{"seed", "1"}, {"r", "7"}, {"budget", "10000"}, {"grid_n", "2000"},
                {"mutate", "false"}});
      break;
    case Verb::kProbe:
      v.insert(problem.begin(), problem.end());
      v.insert(rows.begin(), rows.end());
      v.insert({{"seed", "1"}, {"perturber", "case1-zero-x2"}, {"model", "stable"},
                {"eta", "0.001"}, {"r", "7"}, {"grid_n", "2000"}});
      break;
  }
  return v;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_int(const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::optional<std::vector<std::uint64_t>> to_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(s, ',')) {
    const auto v = to_int(item);
    if (!v || *v < 0) return std::nullopt;
    out.push_back(static_cast<std::uint64_t>(*v));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<std::vector<Exp2Row>> to_rows(const std::string& s) {
  std::vector<Exp2Row> out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) return std::nullopt;
    const auto b = to_double(parts[0]), c = to_double(parts[1]);
    if (!b || !c) return std::nullopt;
    out.push_back({*b, *c});
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace

Values parse_key_values(std::istream& in, const std::string& source) {
  Values out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      throw ParameterError(source + ":" + std::to_string(n) + ": expected key = value");
    }
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ParameterError("no config key '" + key + "'");
  return it->second;
}

Config resolve(Verb verb, const Values& file, const Values& command_line) {
  Config c{verb, defaults(verb)};
  for (const Values* layer : {&file, &command_line}) {
    for (const auto& [k, v] : *layer) {
      if (!c.values.contains(k)) {
        throw ParameterError("unknown key '" + k + "' for " + std::string(to_string(verb)));
      }
      c.values[k] = v;
    }
  }
  return c;
}

// ------------------------------------------------------------ validation

std::vector<std::string> validate(const Config& config) {
  std::vector<std::string> out;
  const Values& v = config.values;
  auto has = [&](const char* k) { return v.contains(k); };
  auto need_int = [&](const char* k, long long lo) -> std::optional<long long> {
    if (!has(k)) return std::nullopt;
    const auto x = to_int(v.at(k));
    if (!x) {
      out.push_back(std::string(k) + ": not an integer: '" + v.at(k) + "'");
    } else if (*x < lo) {
      out.push_back(std::string(k) + ": must be >= " + std::to_string(lo) + ", got " + v.at(k));
      return std::nullopt;
    }
    return x;
  };
  auto need_double = [&](const char* k) -> std::optional<double> {
    if (!has(k)) return std::nullopt;
    const auto x = to_double(v.at(k));
    if (!x) out.push_back(std::string(k) + ": not a finite number: '" + v.at(k) + "'");
    return x;
  };

  if (v.at("out").empty()) out.push_back("out: output directory must not be empty");
  if (has("seed")) need_int("seed", 0);

  const auto a = need_int("a", 1);
  const auto K = need_int("K", 1);
  const auto eps = need_double("epsilon");
  const auto delta = need_double("delta");
  if (a && K && eps && delta) {
    case1::Problem p{static_cast<int>(*a), static_cast<int>(*K), *eps, *delta};
    for (const auto& msg : p.violations()) out.push_back("problem: " + msg);
  }

  if (has("epochs")) need_int("epochs", 0);
  if (has("grid_n")) need_int("grid_n", 2);
  if (has("n_test")) need_int("n_test", 1);
  if (has("r")) need_int("r", 1);
  if (has("samples")) need_int("samples", 1);
  if (has("subsets")) need_int("subsets", 1);
  if (has("pgm_dump")) need_int("pgm_dump", 0);
  if (has("test_seed")) need_int("test_seed", 0);
  if (has("budget")) {
    // The severity estimate shares the budget and needs 100 draws.
    need_int("budget", 100);
  }
  if (has("threshold")) {
    if (const auto t = need_double("threshold"); t && !(*t > 0.5 && *t <= 1.0)) {
      out.push_back("threshold: must be in (0.5, 1], got " + v.at("threshold"));
    }
  }
  if (has("eta")) {
    if (const auto e = need_double("eta"); e && !(*e > 0)) {
      out.push_back("eta: must be > 0, got " + v.at("eta"));
    }
  }
  if (has("b") && has("c")) {
    const auto b = need_double("b"), c = need_double("c");
    if (b && c && !(*b > 0 && *b < *c)) out.push_back("b, c: need 0 < b < c");
  }
  for (const char* k : {"mutate", "relu_between_dense"}) {
    if (has(k) && !to_bool(v.at(k))) out.push_back(std::string(k) + ": expected true or false");
  }
  if (has("psi4_lift") && v.at("psi4_lift") != "zero" && v.at("psi4_lift") != "delta") {
    out.push_back("psi4_lift: expected zero or delta, got '" + v.at("psi4_lift") + "'");
  }
  if (has("seeds") && !to_seed_list(v.at("seeds"))) {
    out.push_back("seeds: expected a comma separated list of non-negative integers");
  }
  if (has("rows")) {
    const auto rows = to_rows(v.at("rows"));
    if (!rows) {
      out.push_back("rows: expected comma separated b:c pairs");
    } else {
      for (const auto& r : *rows)
        if (!(r.b > 0 && r.b < r.c)) out.push_back("rows: every b:c pair needs 0 < b < c");
    }
  }
  if (has("train_a")) {
    if (const auto x = need_double("train_a"); x && !(*x > 0)) {
      out.push_back("train_a: must be > 0");
    }
  }
  if (has("batch")) {
    if (const auto b = need_int("batch", 1); b && *b > 60) {
      out.push_back("batch: must be <= 60 (the training set size)");
    }
  }
  if (has("perturber")) {
    std::optional<diagnostics::Perturber> p;
    try {
      p = diagnostics::parse_perturber(v.at("perturber"));
    } catch (const ParameterError& e) {
      out.push_back(std::string("perturber: ") + e.what());
    }
    const std::string& model = v.at("model");
    if (p && model == "pixel-sum" && *p != diagnostics::Perturber::kCase2FamilySwap) {
      out.push_back("model: pixel-sum only classifies images; use case2-family-swap");
    }
    if (p && model == "stable" && *p == diagnostics::Perturber::kCase2FamilySwap) {
      out.push_back("model: the stable network classifies case1 points only");
    }
    if (model != "stable" && model != "pixel-sum" && !fs::is_regular_file(model)) {
      out.push_back("model: expected stable, pixel-sum or a network file, got '" + model + "'");
    }
  }
  return out;
}

// ------------------------------------------------------------ typed views

case1::Problem problem_of(const Config& c) {
  return {static_cast<int>(*to_int(c.get("a"))), static_cast<int>(*to_int(c.get("K"))),
          *to_double(c.get("epsilon")), *to_double(c.get("delta"))};
}

Exp1Config exp1_of(const Config& c) {
  Exp1Config e;
  e.problem = problem_of(c);
  e.nets = default_exp1_nets(c.get("psi4_lift") == "zero" ? case1::Lift::kZero
                                                          : case1::Lift::kDelta);
  e.epochs = static_cast<std::size_t>(*to_int(c.get("epochs")));
  e.grid_n = static_cast<std::size_t>(*to_int(c.get("grid_n")));
  e.threshold = *to_double(c.get("threshold"));
  e.seed = static_cast<std::uint64_t>(*to_int(c.get("seed")));
  return e;
}

Exp2Config exp2_of(const Config& c) {
  Exp2Config e;
  e.seeds = *to_seed_list(c.get("seeds"));
  e.rows = *to_rows(c.get("rows"));
  e.n_test = static_cast<std::size_t>(*to_int(c.get("n_test")));
  e.test_seed = static_cast<std::uint64_t>(*to_int(c.get("test_seed")));
  e.epochs = static_cast<std::size_t>(*to_int(c.get("epochs")));
  e.batch = static_cast<std::size_t>(*to_int(c.get("batch")));
  e.train_a = *to_double(c.get("train_a"));
  e.relu_between_dense = *to_bool(c.get("relu_between_dense"));
  return e;
}

// ------------------------------------------------------------ manifest

std::string canonical(const Config& config) {
  std::string s = "verb=" + std::string(to_string(config.verb)) + "\n";
  for (const auto& [k, v] : config.values)
    if (k != "out") s += k + "=" + v + "\n";
  return s;
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: cannot initialise digest");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::ostringstream s;
    for (unsigned i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
    return s.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

void write_manifest(const fs::path& dir, const Config& config,
                    const std::vector<std::string>& files, bool complete) {
  std::ofstream out(dir / "manifest.txt");
  out << "verb=" << to_string(config.verb) << '\n';
  out << "config_hash=" << sha256_hex(canonical(config)) << '\n';
  out << "seed=" << config.get(config.verb == Verb::kExp2 ? "seeds" : "seed") << '\n';
  out << "status=" << (complete ? "complete" : "incomplete") << '\n';
  for (const auto& [k, v] : config.values)
    if (k != "out") out << "config." << k << '=' << v << '\n';
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) out << "file." << f << '=' << sha256_file(dir / f) << '\n';
}

std::vector<std::string> check_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) return {"manifest.txt is missing"};
  std::vector<std::string> problems;
  for (const auto& [k, v] : parse_key_values(in, (dir / "manifest.txt").string())) {
    if (!k.starts_with("file.")) continue;
    const std::string name = k.substr(5);
    if (!fs::is_regular_file(dir / name)) {
      problems.push_back(name + ": missing");
    } else if (sha256_file(dir / name) != v) {
      problems.push_back(name + ": checksum mismatch");
    }
  }
  return problems;
}

// ------------------------------------------------------------ runs

namespace {

// Collects the artifacts of one run so the manifest can list them.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    fs::create_directories((dir_ / name).parent_path());
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ParameterError("cannot write " + (dir_ / name).string());
    add(name);
    return out;
  }
  void add(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::uint64_t seed_of(const Config& c) { return static_cast<std::uint64_t>(*to_int(c.get("seed"))); }
std::size_t size_of(const Config& c, const std::string& k) {
  return static_cast<std::size_t>(*to_int(c.get(k)));
}

int run_exp1(const Config& config, Artifacts& art, std::ostream& log) {
  const Exp1Config cfg = exp1_of(config);
  auto on_net = [&](const Exp1NetResult& n) {
    log << n.spec.name << ": " << diagnostics::to_string(n.attribution.verdict)
        << " (agreement with g " << n.attribution.agreement_g << ", with f_a on C0 "
        << n.attribution.agreement_f_c0 << ", on Cdelta " << n.attribution.agreement_f_cdelta
        << ")\n";
    auto out = art.open("loss_" + n.spec.name + ".csv");
    write_loss_history(out, n.epoch_loss);
    out.close();
    save_network(art.path("net_" + n.spec.name + ".fslab"), n.net);
    art.add("net_" + n.spec.name + ".fslab");
  };
  const Exp1Report report = run_experiment_1(cfg, on_net);
  {
    auto out = art.open("predictions.csv");
    write_exp1_predictions(out, report);
  }
  {
    auto out = art.open("summary.csv");
    write_exp1_summary(out, report);
  }
  return kExitOk;
}

int run_exp2(const Config& config, Artifacts& art, std::ostream& log) {
  const Exp2Config cfg = exp2_of(config);
  auto on_seed = [&](const Exp2SeedResult& s) {
    const auto& first = s.scores.front();
    log << "seed " << s.seed << ": tilde " << 100 * first.acc_tilde << "%, hat "
        << 100 * first.acc_hat << "% on b=" << first.b << ", c=" << first.c << '\n';
    auto out = art.open("loss_seed" + std::to_string(s.seed) + ".csv");
    write_loss_history(out, s.epoch_loss);
  };
  const Exp2Report report = run_experiment_2(cfg, on_seed);
  {
    auto out = art.open("table.csv");
    write_exp2_table(out, report);
  }
  {
    auto out = art.open("best.csv");
    write_exp2_best(out, report);
  }
  {
    auto out = art.open("probe.csv");
    out << "seed,perturber,n,flips,flip_rate,perturbation_inf_norm\n";
    for (const auto& s : report.seeds) {
      out << s.seed << ",case2-family-swap," << s.family_swap.n << ',' << s.family_swap.flips
          << ',' << s.family_swap.flip_rate << ',' << s.family_swap.max_perturbation << '\n';
    }
  }
  const auto& best = report.seeds[report.best];
  save_network(art.path("net_best.fslab"), best.net);
  art.add("net_best.fslab");
  log << "best seed " << best.seed << '\n';

  const std::size_t dump = std::min(size_of(config, "pgm_dump"), cfg.n_test);
  for (auto fam : {case2::Family::kTilde, case2::Family::kHat}) {
    const auto images = exp2_test_set(cfg, 0, fam);
    for (std::size_t i = 0; i < dump; ++i) {
      const std::string name = "images/" + std::string(case2::to_string(fam)) + "_" +
                               std::to_string(i) + ".pgm";
      fs::create_directories(art.path(name).parent_path());
      case2::write_pgm(art.path(name), images[i].image);
      art.add(name);
    }
  }
  return kExitOk;
}

int run_construct_stable(const Config& config, Artifacts& art, std::ostream& log) {
  const case1::Problem p = problem_of(config);
  const double eta = *to_double(config.get("eta"));
  const std::size_t r = size_of(config, "r");
  const Network net = case1::build_stable_network(p, eta, r);
  save_network(art.path("stable_net.fslab"), net);
  art.add("stable_net.fslab");

  Rng rng(derive_seed(seed_of(config), kDataStream));
  const auto pts = case1::sample_stable_inputs(p, size_of(config, "samples"), rng);
  const auto pred = predict_labels(net, case1::to_tensor(pts));
  std::size_t errors = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) errors += pred[i] != case1::f_a(p, pts[i]);

  const auto sets = case1::diagnostic_sets(p, size_of(config, "grid_n"));
  const auto verdict = diagnostics::classify_learned_structure(
      diagnostics::classifier_of(net), sets, diagnostics::case1_original(p),
      diagnostics::case1_false());

  double worst = 0.0;
  for (std::size_t s = 0; s < size_of(config, "subsets"); ++s) {
    const auto subset = case1::sample_stable_inputs(p, r, rng);
    std::vector<double> labels;
    for (const auto& x : subset) labels.push_back(case1::f_a(p, x));
    const Tensor logits = net.predict(case1::to_tensor(subset));
    worst = std::max(worst, bce_loss(logits.data(), labels));
  }
  const bool pass = errors == 0 && verdict.agreement_f_c0 == 1.0 &&
                    verdict.agreement_f_cdelta == 1.0 && worst <= eta;
  auto out = art.open("certificate.txt");
  out.precision(17);
  out << "logit_scale_N=" << case1::logit_scale(eta, r) << '\n'
      << "hidden_units=" << 4 * p.K << '\n'
      << "samples=" << pts.size() << '\n'
      << "misclassified=" << errors << '\n'
      << "grid_agreement_C0=" << verdict.agreement_f_c0 << '\n'
      << "grid_agreement_Cdelta=" << verdict.agreement_f_cdelta << '\n'
      << "subsets=" << size_of(config, "subsets") << '\n'
      << "subset_size=" << r << '\n'
      << "max_subset_loss_sum=" << worst << '\n'
      << "eta=" << eta << '\n'
      << "certificate=" << (pass ? "pass" : "fail") << '\n';
  log << "stable network: " << errors << " errors on " << pts.size()
      << " samples, worst subset loss " << worst << " (eta " << eta << "), "
      << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

template <class P>
void write_verify_row(std::ostream& out, const std::string& instance,
                      const diagnostics::VerifyResult<P>& v,
                      const diagnostics::SeverityEstimate& s) {
  out << instance << ',' << diagnostics::to_string(v.verdict) << ',' << v.samples_drawn << ','
      << v.f_label << ',' << v.g_label << ',' << s.p << ',' << s.half_width << ',' << s.n << '\n';
}

template <class P>
diagnostics::StructureOracle<P> mutated(const diagnostics::StructureOracle<P>& g, const P& at) {
  return {g.name + " (flipped at one training point)",
          [g, at](const P& x) { return x == at ? 1 - g(x) : g(x); }, g.predicates};
}

int run_verify(const Config& config, Artifacts& art, std::ostream& log) {
  const case1::Problem p = problem_of(config);
  const std::size_t budget = size_of(config, "budget");
  const bool mutate = *to_bool(config.get("mutate"));
  const double b = *to_double(config.get("b")), c = *to_double(config.get("c"));
  const std::uint64_t seed = seed_of(config);

  auto csv = art.open("verify.csv");
  csv << "instance,verdict,samples_drawn,f_label,g_label,severity,severity_half_width,"
         "severity_n\n";
  auto wit = art.open("witnesses.txt");
  wit.precision(17);

  // Case 1: T_delta^r, witnesses walk the C_0 grid.
  Rng data_rng(derive_seed(seed, kDataStream));
  const std::size_t r = size_of(config, "r");
  const auto alloc = r == case1::stable_region(p).size() ? case1::Allocation::kOnePerInterval
                                                         : case1::Allocation::kBalanced;
  std::vector<case1::Point> T1;
  for (const auto& x : case1::sample_training_set(p, r, case1::Lift::kDelta, data_rng, alloc))
    T1.push_back(x.point());
  const auto sets = case1::diagnostic_sets(p, size_of(config, "grid_n"));
  std::size_t next = 0;
  diagnostics::Sampler<case1::Point> grid_walk = [&] { return sets.c0[next++ % sets.size()]; };
  const auto f1 = diagnostics::case1_original(p);
  const auto g1 = mutate ? mutated(diagnostics::case1_false(), T1.front())
                         : diagnostics::case1_false();
  const auto v1 = diagnostics::verify_false_structure<case1::Point>(f1, g1, T1, grid_walk, budget);
  Rng sev1_rng(derive_seed(seed, kTestStream, 1));
  const double lo = p.b();
  diagnostics::Sampler<case1::Point> on_c0 = [&] {
    return case1::Point{sev1_rng.uniform(lo, 1.0), 0.0};
  };
  const auto s1 = diagnostics::estimate_severity<case1::Point>(f1, g1, on_c0, budget);
  write_verify_row(csv, "case1", v1, s1);
  wit << "case1.verdict=" << diagnostics::to_string(v1.verdict) << '\n';
  if (v1.witness) {
    wit << "case1.witness=" << v1.witness->x1 << ' ' << v1.witness->x2 << '\n'
        << "case1.f=" << v1.f_label << " (" << f1.predicates[v1.f_label] << ")\n"
        << "case1.g=" << v1.g_label << " (" << g1.predicates[v1.g_label] << ")\n";
  }
  log << "case1: " << diagnostics::to_string(v1.verdict) << ", severity " << s1.p << " +- "
      << s1.half_width << '\n';

  // Case 2: the 60 tilde training images, witnesses from the hat family.
  std::vector<case2::GrayImage> T2;
  for (auto& im : case2::enumerate_training_set()) T2.push_back(im.image);
  Rng hat_rng(derive_seed(seed, kTestStream, 2));
  diagnostics::Sampler<case2::GrayImage> hats = [&] {
    return case2::sample_test_set(case2::Family::kHat, b, c, 1, hat_rng).front().image;
  };
  const auto f2 = diagnostics::case2_original();
  const auto g2 = mutate ? mutated(diagnostics::case2_false(), T2.front())
                         : diagnostics::case2_false();
  const auto v2 = diagnostics::verify_false_structure<case2::GrayImage>(f2, g2, T2, hats, budget);
  Rng sev2_rng(derive_seed(seed, kTestStream, 3));
  diagnostics::Sampler<case2::GrayImage> hat_law = [&] {
    return case2::sample_test_set(case2::Family::kHat, b, c, 1, sev2_rng).front().image;
  };
  const auto s2 = diagnostics::estimate_severity<case2::GrayImage>(f2, g2, hat_law, budget);
  write_verify_row(csv, "case2", v2, s2);
  wit << "case2.verdict=" << diagnostics::to_string(v2.verdict) << '\n';
  if (v2.witness) {
    wit << "case2.witness=witness_case2.pgm\n"
        << "case2.pixel_sum=" << case2::pixel_sum(*v2.witness) << '\n'
        << "case2.f=" << v2.f_label << " (" << f2.predicates[v2.f_label] << ")\n"
        << "case2.g=" << v2.g_label << " (" << g2.predicates[v2.g_label] << ")\n";
    case2::write_pgm(art.path("witness_case2.pgm"), *v2.witness);
    art.add("witness_case2.pgm");
  }
  log << "case2: " << diagnostics::to_string(v2.verdict) << ", severity " << s2.p << " +- "
      << s2.half_width << '\n';
  return kExitOk;
}

int run_probe(const Config& config, Artifacts& art, std::ostream& log) {
  const auto perturber = diagnostics::parse_perturber(config.get("perturber"));
  const std::string& model = config.get("model");
  const case1::Problem p = problem_of(config);
  diagnostics::ProbeResult res;
  if (perturber == diagnostics::Perturber::kCase2FamilySwap) {
    Rng rng(derive_seed(seed_of(config), kTestStream));
    const auto images = case2::sample_test_set(case2::Family::kTilde,
                                               *to_double(config.get("b")),
                                               *to_double(config.get("c")),
                                               size_of(config, "n_test"), rng);
    std::optional<Network> net;
    diagnostics::ImageClassifier classify;
    if (model == "pixel-sum") {
      classify = [](std::span<const case2::LabeledImage> ims) {
        std::vector<int> out;
        for (const auto& im : ims) out.push_back(case2::pixel_sum_g(im.image));
        return out;
      };
    } else {
      net = load_network(model);
      classify = diagnostics::image_classifier_of(*net);
    }
    res = diagnostics::adversarial_probe(classify, images, perturber);
  } else {
    const Network net = model == "stable"
                            ? case1::build_stable_network(p, *to_double(config.get("eta")),
                                                          size_of(config, "r"))
                            : load_network(model);
    const auto sets = case1::diagnostic_sets(p, size_of(config, "grid_n"));
    // Zeroing x2 is probed on C_delta, adding delta on C_0, both inside S_eps.
    const auto& src = perturber == diagnostics::Perturber::kCase1ZeroX2 ? sets.cdelta : sets.c0;
    std::vector<case1::Point> pts;
    for (std::size_t i = 0; i < src.size(); ++i)
      if (sets.in_stable[i]) pts.push_back(src[i]);
    res = diagnostics::adversarial_probe(diagnostics::classifier_of(net), pts, perturber, p);
  }
  auto out = art.open("probe.csv");
  out << "perturber,model,n,flips,flip_rate,perturbation_inf_norm\n"
      << diagnostics::to_string(perturber) << ',' << model << ',' << res.n << ',' << res.flips
      << ',' << res.flip_rate << ',' << res.max_perturbation << '\n';
  log << diagnostics::to_string(perturber) << " on " << model << ": flip rate "
      << res.flip_rate << " (" << res.flips << " of " << res.n << "), perturbation "
      << res.max_perturbation << '\n';
  return kExitOk;
}

}  // namespace

int run(const Config& config, std::ostream& log) {
  const auto violations = validate(config);
  if (!violations.empty()) {
    log << "invalid configuration:\n";
    for (const auto& v : violations) log << "  " << v << '\n';
    return kExitInvalid;
  }
  Artifacts art(config.get("out"));
  fs::remove(art.path("INCOMPLETE"));
  int status = kExitOk;
  try {
    switch (config.verb) {
      case Verb::kExp1: status = run_exp1(config, art, log); break;
      case Verb::kExp2: status = run_exp2(config, art, log); break;
      case Verb::kConstructStable: status = run_construct_stable(config, art, log); break;
      case Verb::kVerify: status = run_verify(config, art, log); break;
      case Verb::kProbe: status = run_probe(config, art, log); break;
    }
  } catch (const DivergedError& e) {
    log << "error: " << e.what() << '\n';
    std::ofstream(art.path("INCOMPLETE")) << e.what() << '\n';
    art.add("INCOMPLETE");
    write_manifest(art.dir(), config, art.files(), false);
    return kExitDiverged;
  }
  write_manifest(art.dir(), config, art.files(), true);
  return status;
}

}  // namespace fslab::cli
