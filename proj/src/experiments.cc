#include "fslab/experiments.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fslab/errors.h"
#include "fslab/training.h"

namespace fslab {

namespace {

std::vector<double> per_epoch(const std::vector<double>& batch_losses, std::size_t epochs) {
  std::vector<double> out;
  if (epochs == 0) return out;
  const std::size_t per = batch_losses.size() / epochs;
  out.reserve(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto first = batch_losses.begin() + static_cast<std::ptrdiff_t>(e * per);
    out.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(per), 0.0) /
                  static_cast<double>(per));
  }
  return out;
}

std::vector<case1::Point> stable_only(const std::vector<case1::Point>& pts,
                                      const std::vector<bool>& mask) {
  std::vector<case1::Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (mask[i]) out.push_back(pts[i]);
  return out;
}

const char* lift_name(case1::Lift l) { return l == case1::Lift::kZero ? "zero" : "delta"; }

}  // namespace

// ------------------------------------------------------------ experiment 1

std::vector<Exp1NetSpec> default_exp1_nets(case1::Lift fourth_lift) {
  return {{"Psi1", 7, case1::Lift::kDelta, 7},
          {"Psi2", 5000, case1::Lift::kZero, 50},
          {"Psi3", 5000, case1::Lift::kDelta, 50},
          {"Psi4", 10000, fourth_lift, 50}};
}

Exp1Report run_experiment_1(const Exp1Config& config,
                            const std::function<void(const Exp1NetResult&)>& on_net) {
  const case1::Problem& p = config.problem;
  p.validate();
  if (config.nets.empty()) throw ParameterError("exp1: no networks configured");

  Exp1Report report{config, case1::diagnostic_sets(p, config.grid_n), {}};
  const auto& sets = report.sets;
  const auto f = diagnostics::case1_original(p);
  const auto g = diagnostics::case1_false();
  const auto stable_c0 = stable_only(sets.c0, sets.in_stable);
  const auto stable_cd = stable_only(sets.cdelta, sets.in_stable);
  const std::size_t intervals = case1::stable_region(p).size();

  for (std::size_t i = 0; i < config.nets.size(); ++i) {
    const Exp1NetSpec& spec = config.nets[i];
    Rng data_rng(derive_seed(config.seed, kDataStream, i));
    Rng init_rng(derive_seed(config.seed, kInitStream, i));
    Rng shuffle_rng(derive_seed(config.seed, kShuffleStream, i));

    // r equal to the interval count means one sample in each interval.
    const auto alloc = spec.r == intervals ? case1::Allocation::kOnePerInterval
                                           : case1::Allocation::kBalanced;
    const auto points = case1::sample_training_set(p, spec.r, spec.lift, data_rng, alloc);
    const Dataset data = case1::to_dataset(points);

    Network net = case1::make_interval_network(p);
    glorot_initialize(net, init_rng);
    const TrainResult tr = train(
        net, data,
        {.epochs = config.epochs, .batch_size = spec.batch, .shuffle = true, .adam = {}},
        shuffle_rng);

    const Tensor logits = net.predict(data.inputs);
    const double loss_sum = bce_loss(logits.data(), data.labels);
    const auto classify = diagnostics::classifier_of(net);
    auto pred_c0 = classify(sets.c0);
    auto pred_cd = classify(sets.cdelta);
    const auto attribution =
        diagnostics::attribute_predictions(pred_c0, pred_cd, sets, f, g, config.threshold);
    const auto zero_x2 = diagnostics::adversarial_probe(
        classify, stable_cd, diagnostics::Perturber::kCase1ZeroX2, p);
    const auto add_delta = diagnostics::adversarial_probe(
        classify, stable_c0, diagnostics::Perturber::kCase1AddDelta, p);

    report.nets.push_back(Exp1NetResult{.spec = spec,
                                        .pred_c0 = std::move(pred_c0),
                                        .pred_cdelta = std::move(pred_cd),
                                        .attribution = attribution,
                                        .epoch_loss = per_epoch(tr.batch_losses, config.epochs),
                                        .final_loss_sum = loss_sum,
                                        .zero_x2 = zero_x2,
                                        .add_delta = add_delta,
                                        .net = std::move(net)});
    if (on_net) on_net(report.nets.back());
  }
  return report;
}

void write_exp1_predictions(std::ostream& out, const Exp1Report& report) {
  const auto& sets = report.sets;
  const case1::Problem& p = report.config.problem;
  out << "set,x1,x2,f_a";
  for (const auto& n : report.nets) out << ",prediction_" << n.spec.name;
  out << ",in_S_eps\n";
  out.precision(17);
  for (int which = 0; which < 2; ++which) {
    const auto& pts = which == 0 ? sets.c0 : sets.cdelta;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out << (which == 0 ? "C0" : "Cdelta") << ',' << pts[i].x1 << ',' << pts[i].x2 << ','
          << case1::f_a(p, pts[i]);
      for (const auto& n : report.nets) out << ',' << (which == 0 ? n.pred_c0 : n.pred_cdelta)[i];
      out << ',' << (sets.in_stable[i] ? 1 : 0) << '\n';
    }
  }
}

void write_exp1_summary(std::ostream& out, const Exp1Report& report) {
  out << "network,r,lift,batch,epochs,seed,verdict,agreement_g,agreement_f_C0,"
         "agreement_f_Cdelta,threshold,grid_points_in_S_eps,final_loss_sum,"
         "flip_rate_zero_x2,flip_rate_add_delta,perturbation_inf_norm\n";
  out.precision(10);
  for (const auto& n : report.nets) {
    const auto& v = n.attribution;
    out << n.spec.name << ',' << n.spec.r << ',' << lift_name(n.spec.lift) << ','
        << n.spec.batch << ',' << report.config.epochs << ',' << report.config.seed << ','
        << diagnostics::to_string(v.verdict) << ',' << v.agreement_g << ','
        << v.agreement_f_c0 << ',' << v.agreement_f_cdelta << ',' << v.threshold << ','
        << v.grid_points << ',' << n.final_loss_sum << ',' << n.zero_x2.flip_rate << ','
        << n.add_delta.flip_rate << ','
        << std::max(n.zero_x2.max_perturbation, n.add_delta.max_perturbation) << '\n';
  }
}

void write_loss_history(std::ostream& out, const std::vector<double>& epoch_loss) {
  out << "epoch,mean_batch_loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << e + 1 << ',' << epoch_loss[e] << '\n';
}

// ------------------------------------------------------------ experiment 2

std::vector<Exp2Row> default_exp2_rows() {
  return {{0.009, 0.01}, {0.008, 0.009}, {0.007, 0.008}, {0.006, 0.007}};
}

std::vector<case2::LabeledImage> exp2_test_set(const Exp2Config& config, std::size_t row,
                                               case2::Family family) {
  const Exp2Row& r = config.rows.at(row);
  Rng rng(derive_seed(config.test_seed, kTestStream,
                      2 * row + (family == case2::Family::kHat ? 1 : 0)));
  return case2::sample_test_set(family, r.b, r.c, config.n_test, rng);
}

namespace {

double accuracy(std::span<const int> pred, std::span<const case2::LabeledImage> images) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < images.size(); ++i) ok += pred[i] == images[i].label;
  return static_cast<double>(ok) / static_cast<double>(images.size());
}

double g_accuracy(std::span<const case2::LabeledImage> images) {
  std::size_t ok = 0;
  for (const auto& im : images) ok += case2::pixel_sum_g(im.image) == im.label;
  return static_cast<double>(ok) / static_cast<double>(images.size());
}

}  // namespace

Exp2Report run_experiment_2(const Exp2Config& config,
                            const std::function<void(const Exp2SeedResult&)>& on_seed) {
  if (config.seeds.empty()) throw ParameterError("exp2: no seeds configured");
  if (config.rows.empty()) throw ParameterError("exp2: no (b, c) rows configured");
  for (const auto& r : config.rows) {
    if (!(r.b > 0 && r.b < r.c)) throw ParameterError("exp2: every row needs 0 < b < c");
  }
  if (config.n_test == 0) throw ParameterError("exp2: test set size must be at least 1");
  if (config.batch == 0 || config.batch > 2 * case2::kPositions) {
    throw ParameterError("exp2: batch size must be in [1, 60]");
  }

  const Dataset train_data = case2::to_dataset(case2::enumerate_training_set(config.train_a));
  std::vector<std::vector<case2::LabeledImage>> tilde, hat;
  std::vector<double> g_tilde, g_hat;
  for (std::size_t r = 0; r < config.rows.size(); ++r) {
    tilde.push_back(exp2_test_set(config, r, case2::Family::kTilde));
    hat.push_back(exp2_test_set(config, r, case2::Family::kHat));
    g_tilde.push_back(g_accuracy(tilde.back()));
    g_hat.push_back(g_accuracy(hat.back()));
  }

  Exp2Report report{config, {}, 0};
  for (std::uint64_t seed : config.seeds) {
    Rng init_rng(derive_seed(seed, kInitStream));
    Rng shuffle_rng(derive_seed(seed, kShuffleStream));
    Network net = case2::build_cnn(init_rng, config.relu_between_dense);
    const TrainResult tr = train(
        net, train_data,
        {.epochs = config.epochs, .batch_size = config.batch, .shuffle = true, .adam = {}},
        shuffle_rng);
    const auto classify = diagnostics::image_classifier_of(net);
    std::vector<Exp2Score> scores;
    for (std::size_t r = 0; r < config.rows.size(); ++r) {
      scores.push_back({config.rows[r].b, config.rows[r].c, seed,
                        accuracy(classify(tilde[r]), tilde[r]),
                        accuracy(classify(hat[r]), hat[r]), g_tilde[r], g_hat[r]});
    }
    const auto swap = diagnostics::adversarial_probe(classify, tilde[0],
                                                     diagnostics::Perturber::kCase2FamilySwap);
    report.seeds.push_back(Exp2SeedResult{.seed = seed,
                                          .scores = std::move(scores),
                                          .epoch_loss = per_epoch(tr.batch_losses, config.epochs),
                                          .family_swap = swap,
                                          .net = std::move(net)});
    if (on_seed) on_seed(report.seeds.back());
  }

  auto gap = [&](std::size_t i) {
    const auto& s = report.seeds[i].scores.front();
    return (1.0 - s.acc_tilde) + s.acc_hat;
  };
  for (std::size_t i = 1; i < report.seeds.size(); ++i)
    if (gap(i) < gap(report.best)) report.best = i;
  return report;
}

namespace {

void write_score(std::ostream& out, const Exp2Score& s) {
  out << s.b << ',' << s.c << ',' << s.seed << ',' << s.acc_tilde << ',' << s.acc_hat << ','
      << s.acc_g_tilde << ',' << s.acc_g_hat << '\n';
}

constexpr const char* kExp2Header = "b,c,seed,acc_tilde,acc_hat,acc_g_tilde,acc_g_hat\n";

}  // namespace

void write_exp2_table(std::ostream& out, const Exp2Report& report) {
  out << kExp2Header;
  out.precision(10);
  for (const auto& s : report.seeds)
    for (const auto& row : s.scores) write_score(out, row);
}

void write_exp2_best(std::ostream& out, const Exp2Report& report) {
  out << kExp2Header;
  out.precision(10);
  if (report.seeds.empty()) return;
  for (const auto& row : report.seeds[report.best].scores) write_score(out, row);
}

}  // namespace fslab
